//! Pareto-smoothed importance sampling leave-one-out cross-validation.

use serde::{Deserialize, Serialize};

use super::waic::pointwise_se;
use crate::error::{Error, Result};
use crate::likelihood::PointwiseLogLik;
use crate::math::{log_mean_exp, log_sum_exp};

/// Shape `k` and scale `sigma` of a generalized Pareto fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdFit {
    pub k: f64,
    pub sigma: f64,
}

/// Empirical-Bayes fit of a zero-location generalized Pareto distribution
/// (Zhang and Stephens), with the weakly informative shrinkage of `k`
/// toward 0.5. `x` must be sorted ascending and positive.
pub fn gpdfit(x: &[f64]) -> GpdFit {
    let n = x.len();
    let prior = 3.0;
    let m = 30 + (n as f64).sqrt().floor() as usize;
    let x_star = x[((n as f64) / 4.0 + 0.5).floor() as usize - 1];
    let x_max = x[n - 1];
    let theta: Vec<f64> = (1..=m)
        .map(|j| 1.0 / x_max + (1.0 - (m as f64 / (j as f64 - 0.5)).sqrt()) / prior / x_star)
        .collect();
    let profile = |t: f64| {
        let a = -t;
        let k = x.iter().map(|&v| (a * v).ln_1p()).sum::<f64>() / n as f64;
        (a / k).ln() - k - 1.0
    };
    let l_theta: Vec<f64> = theta.iter().map(|&t| n as f64 * profile(t)).collect();
    let lse = log_sum_exp(&l_theta);
    let theta_hat: f64 = theta
        .iter()
        .zip(&l_theta)
        .map(|(t, l)| t * (l - lse).exp())
        .filter(|v| v.is_finite())
        .sum();
    let mut k = x.iter().map(|&v| (-theta_hat * v).ln_1p()).sum::<f64>() / n as f64;
    let sigma = -k / theta_hat;
    let nf = n as f64;
    k = k * nf / (nf + 10.0) + 10.0 * 0.5 / (nf + 10.0);
    if k.is_nan() {
        k = f64::INFINITY;
    }
    GpdFit { k, sigma }
}

/// Quantile function of the zero-location generalized Pareto.
pub fn qgpd(p: f64, k: f64, sigma: f64) -> f64 {
    if k == 0.0 {
        -sigma * (-p).ln_1p()
    } else {
        sigma * (-k * (-p).ln_1p()).exp_m1() / k
    }
}

/// Smoothed, normalized log weights and the Pareto shape estimate.
///
/// Log ratios that are all equal yield uniform weights and `k = -inf`.
pub fn psis_smooth(log_ratios: &[f64]) -> (Vec<f64>, f64) {
    let s = log_ratios.len();
    let max = log_ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lw: Vec<f64> = log_ratios.iter().map(|v| v - max).collect();
    let min = lw.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut k = f64::NEG_INFINITY;
    if min < 0.0 {
        let tail_len = ((0.2 * s as f64).min(3.0 * (s as f64).sqrt())).ceil() as usize;
        if tail_len >= 5 && tail_len < s {
            let mut order: Vec<usize> = (0..s).collect();
            order.sort_by(|&a, &b| lw[a].total_cmp(&lw[b]));
            let tail = &order[s - tail_len..];
            let cutoff = lw[order[s - tail_len - 1]];
            let tail_lw: Vec<f64> = tail.iter().map(|&i| lw[i]).collect();
            if tail_lw[tail_len - 1] > cutoff {
                let exp_cut = cutoff.exp();
                let x: Vec<f64> = tail_lw.iter().map(|v| v.exp() - exp_cut).collect();
                let fit = gpdfit(&x);
                k = fit.k;
                if k.is_finite() {
                    for (r, &i) in tail.iter().enumerate() {
                        let p = (r as f64 + 0.5) / tail_len as f64;
                        lw[i] = (qgpd(p, k, fit.sigma) + exp_cut).ln();
                    }
                }
            } else {
                k = f64::INFINITY;
            }
        } else {
            k = f64::INFINITY;
        }
        // truncate at the largest raw weight
        for v in lw.iter_mut() {
            *v = v.min(0.0);
        }
    }
    let norm = log_sum_exp(&lw);
    lw.iter_mut().for_each(|v| *v -= norm);
    (lw, k)
}

/// Counts of Pareto `k` values in `(-inf, 0.5]`, `(0.5, 0.7]`, `(0.7, 1]`
/// and `(1, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParetoKCounts {
    pub good: usize,
    pub ok: usize,
    pub bad: usize,
    pub very_bad: usize,
}

impl ParetoKCounts {
    pub fn from_k(ks: &[f64]) -> Self {
        let mut c = Self {
            good: 0,
            ok: 0,
            bad: 0,
            very_bad: 0,
        };
        for &k in ks {
            if k <= 0.5 {
                c.good += 1;
            } else if k <= 0.7 {
                c.ok += 1;
            } else if k <= 1.0 {
                c.bad += 1;
            } else {
                c.very_bad += 1;
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.good + self.ok + self.bad + self.very_bad
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsisLoo {
    pub elpd_loo: f64,
    pub se_elpd_loo: f64,
    pub p_loo: f64,
    pub pointwise: Vec<f64>,
    pub pareto_k: Vec<f64>,
    pub k_counts: ParetoKCounts,
    pub warnings: Vec<String>,
}

/// Draw count below which tail fits are flagged as unstable.
pub const MIN_STABLE_DRAWS: usize = 100;

/// Leave-one-patient-out predictive density by Pareto-smoothed importance
/// sampling.
pub fn psis_loo(pw: &PointwiseLogLik) -> Result<PsisLoo> {
    let s = pw.n_draws();
    if s == 0 || pw.n_patients() == 0 {
        return Err(Error::validation("pointwise log-likelihood is empty"));
    }
    if pw.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::numeric("pointwise log-likelihood contains non-finite entries"));
    }
    let mut warnings = Vec::new();
    if s < MIN_STABLE_DRAWS {
        warnings.push(format!("only {s} draws; Pareto tail fits may be unstable"));
    }
    let mut pointwise = Vec::with_capacity(pw.n_patients());
    let mut pareto_k = Vec::with_capacity(pw.n_patients());
    let mut lpd = 0.0;
    for i in 0..pw.n_patients() {
        let ll = pw.column(i);
        lpd += log_mean_exp(&ll);
        let neg: Vec<f64> = ll.iter().map(|v| -v).collect();
        let (lw, k) = psis_smooth(&neg);
        let terms: Vec<f64> = lw.iter().zip(&ll).map(|(w, l)| w + l).collect();
        pointwise.push(log_sum_exp(&terms));
        pareto_k.push(k);
    }
    let k_counts = ParetoKCounts::from_k(&pareto_k);
    let high = k_counts.bad + k_counts.very_bad;
    if high > 0 {
        let noun = if high == 1 { "patient has" } else { "patients have" };
        warnings.push(format!("{high} {noun} Pareto k above 0.7; their PSIS-LOO estimates are unreliable"));
    }
    let elpd_loo: f64 = pointwise.iter().sum();
    Ok(PsisLoo {
        elpd_loo,
        se_elpd_loo: pointwise_se(&pointwise),
        p_loo: lpd - elpd_loo,
        pointwise,
        pareto_k,
        k_counts,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_known_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (k, sigma) = (0.3, 1.5);
        let mut x: Vec<f64> = (0..10_000).map(|_| qgpd(rng.random::<f64>(), k, sigma)).collect();
        x.sort_by(f64::total_cmp);
        let fit = gpdfit(&x);
        assert!((fit.k - k).abs() < 0.1, "{fit:?}");
        assert!((fit.sigma - sigma).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn qgpd_exponential_limit() {
        assert!((qgpd(0.5, 0.0, 2.0) - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((qgpd(0.5, 1e-9, 2.0) - 2.0 * 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn constant_column_gives_its_value() {
        let pw = PointwiseLogLik::new(vec!["a".into(), "b".into()], vec![vec![-2.5, -1.0]; 200]).unwrap();
        let loo = psis_loo(&pw).unwrap();
        assert!((loo.pointwise[0] + 2.5).abs() < 1e-12);
        assert!((loo.pointwise[1] + 1.0).abs() < 1e-12);
        assert!(loo.pareto_k.iter().all(|k| *k == f64::NEG_INFINITY));
        assert_eq!(loo.k_counts.total(), 2);
    }

    #[test]
    fn smoothed_weights_are_normalized_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lr: Vec<f64> = (0..1000).map(|_| 2.0 * rng.random::<f64>().ln().abs().sqrt()).collect();
        let (lw, k) = psis_smooth(&lr);
        assert!(k.is_finite());
        let total: f64 = lw.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
