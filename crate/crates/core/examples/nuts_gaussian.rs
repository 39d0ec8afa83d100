//! The No-U-Turn sampler on a badly scaled Gaussian: the adapted diagonal
//! metric recovers the scales and every chain mixes.

use comorbidity_hmm::math::{mean, variance};
use comorbidity_hmm::sampler::{nuts_sample, ChainConfig, LogDensity};

struct Scaled(Vec<f64>);

impl LogDensity for Scaled {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn logp_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = 0.0;
        for ((g, x), s) in grad.iter_mut().zip(q).zip(&self.0) {
            lp -= 0.5 * (x / s).powi(2);
            *g = -x / (s * s);
        }
        lp
    }
}

fn main() -> comorbidity_hmm::Result<()> {
    let target = Scaled(vec![0.1, 1.0, 10.0]);
    let config = ChainConfig {
        n_warmup: 1000,
        n_sampling: 1000,
        seed: 3,
        ..ChainConfig::default()
    };
    let draws = nuts_sample(&target, &config)?;
    let diag = draws.diagnostics();
    for k in 0..target.dim() {
        let all = draws.series(k).concat();
        println!(
            "x[{k}]: mean {:+.3}, sd {:.3} (true {}), rhat {:.3}, ess {:.0}",
            mean(&all),
            variance(&all).sqrt(),
            target.0[k],
            diag.rhat[k].unwrap_or(f64::NAN),
            diag.ess_bulk[k].unwrap_or(f64::NAN)
        );
    }
    for a in &draws.adaptation {
        println!("chain {}: step {:.3}, inverse metric {:.3?}", a.chain, a.step_size, a.inv_metric);
    }
    println!("{} divergent transitions", draws.n_divergent());
    Ok(())
}
