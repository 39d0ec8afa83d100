//! NUTS on targets with known moments.

use std::time::Instant;

use comorbidity_hmm::math::{mean, variance};
use comorbidity_hmm::sampler::{nuts_sample, ChainConfig, LogDensity};

/// Independent normals with the given scales.
struct Gaussian {
    scales: Vec<f64>,
}

impl LogDensity for Gaussian {
    fn dim(&self) -> usize {
        self.scales.len()
    }

    fn logp_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = 0.0;
        for ((g, &x), &s) in grad.iter_mut().zip(q).zip(&self.scales) {
            lp -= 0.5 * (x / s).powi(2);
            *g = -x / (s * s);
        }
        lp
    }
}

fn config(seed: u64) -> ChainConfig {
    ChainConfig {
        n_chains: 4,
        n_warmup: 1000,
        n_sampling: 1000,
        seed,
        ..ChainConfig::default()
    }
}

#[test]
fn ten_dimensional_standard_normal() {
    let start = Instant::now();
    let target = Gaussian { scales: vec![1.0; 10] };
    let draws = nuts_sample(&target, &config(5)).unwrap();
    let diag = draws.diagnostics();
    let n = draws.n_draws() as f64;
    for k in 0..10 {
        let all: Vec<f64> = draws.series(k).concat();
        assert!(mean(&all).abs() < 0.1, "mean of {k}");
        assert!((variance(&all) - 1.0).abs() < 0.1, "variance of {k}");
        assert!(diag.rhat[k].unwrap() < 1.01);
        assert!(diag.ess_bulk[k].unwrap() > 0.25 * n);
    }
    assert_eq!(draws.n_divergent(), 0);
    assert!(start.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn metric_adaptation_handles_badly_scaled_targets() {
    let scales = vec![0.01, 0.1, 1.0, 10.0, 100.0];
    let target = Gaussian { scales: scales.clone() };
    let draws = nuts_sample(&target, &config(6)).unwrap();
    for (k, s) in scales.iter().enumerate() {
        let all: Vec<f64> = draws.series(k).concat();
        let sd = variance(&all).sqrt();
        assert!((sd / s - 1.0).abs() < 0.15, "scale {s}: sd {sd}");
    }
    for a in &draws.adaptation {
        let ratio = a.inv_metric[4] / a.inv_metric[0];
        assert!(ratio > 1e7 && ratio < 1e9, "metric ratio {ratio}");
    }
}

#[test]
fn same_seed_same_draws() {
    let target = Gaussian { scales: vec![1.0, 2.0, 3.0] };
    let cfg = ChainConfig {
        n_warmup: 200,
        n_sampling: 200,
        ..config(9)
    };
    let a = nuts_sample(&target, &cfg).unwrap();
    let b = nuts_sample(&target, &cfg).unwrap();
    for c in 0..cfg.n_chains {
        for i in 0..cfg.n_sampling {
            assert_eq!(a.draw(c, i), b.draw(c, i));
        }
    }
    let other = nuts_sample(&target, &ChainConfig { seed: 10, ..cfg.clone() }).unwrap();
    assert_ne!(a.draw(0, 0), other.draw(0, 0));
}
