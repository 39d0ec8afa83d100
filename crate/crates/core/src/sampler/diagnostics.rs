//! Split-chain R-hat and effective sample size.

use serde::{Deserialize, Serialize};

use crate::math::{mean, variance};

/// Splits every chain into two halves, dropping the middle draw of odd
/// lengths.
fn split_chains(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(&c[..half]);
        out.push(&c[c.len() - half..]);
    }
    out
}

fn check_shape(chains: &[Vec<f64>]) -> Option<usize> {
    let n = chains.first()?.len();
    if chains.iter().any(|c| c.len() != n) || chains.iter().flatten().any(|v| !v.is_finite()) {
        return None;
    }
    Some(n)
}

/// Split R-hat of one scalar quantity, `chains[c][i]`.
///
/// `None` when undefined: fewer than 4 draws per chain, ragged or
/// non-finite input, or zero within-chain variance.
pub fn compute_rhat(chains: &[Vec<f64>]) -> Option<f64> {
    let n = check_shape(chains)?;
    if n < 4 {
        return None;
    }
    let split = split_chains(chains);
    let half = split[0].len() as f64;
    let means: Vec<f64> = split.iter().map(|c| mean(c)).collect();
    let w = mean(&split.iter().map(|c| variance(c)).collect::<Vec<_>>());
    if !(w > 0.0) {
        return None;
    }
    let b = half * variance(&means);
    let var_plus = (half - 1.0) / half * w + b / half;
    Some((var_plus / w).sqrt())
}

/// Effective sample size of one scalar quantity over split chains, using
/// Geyer's initial monotone sequence to truncate the autocorrelation sum.
pub fn compute_ess(chains: &[Vec<f64>]) -> Option<f64> {
    let n = check_shape(chains)?;
    if n < 4 {
        return None;
    }
    let split = split_chains(chains);
    let m = split.len();
    let n = split[0].len();
    let chain_means: Vec<f64> = split.iter().map(|c| mean(c)).collect();
    let chain_vars: Vec<f64> = split.iter().map(|c| variance(c)).collect();
    let mean_var = mean(&chain_vars);
    if !(mean_var > 0.0) {
        return None;
    }
    let mut var_plus = mean_var * (n as f64 - 1.0) / n as f64;
    if m > 1 {
        var_plus += variance(&chain_means);
    }

    // biased autocovariance at `lag`, averaged over chains
    let acov = |lag: usize| -> f64 {
        split
            .iter()
            .zip(&chain_means)
            .map(|(c, mu)| {
                (0..n - lag).map(|i| (c[i] - mu) * (c[i + lag] - mu)).sum::<f64>() / n as f64
            })
            .sum::<f64>()
            / m as f64
    };
    let rho_at = |lag: usize| 1.0 - (mean_var - acov(lag)) / var_plus;

    let mut rho_hat = vec![0.0; n];
    rho_hat[0] = 1.0;
    let mut rho_even = 1.0;
    let mut rho_odd = rho_at(1);
    rho_hat[1] = rho_odd;
    let mut t = 1;
    while t + 4 < n && rho_even + rho_odd > 0.0 {
        rho_even = rho_at(t + 1);
        rho_odd = rho_at(t + 2);
        if rho_even + rho_odd >= 0.0 {
            rho_hat[t + 1] = rho_even;
            rho_hat[t + 2] = rho_odd;
        }
        t += 2;
    }
    let max_t = t;
    if rho_even > 0.0 && max_t + 1 < n {
        rho_hat[max_t + 1] = rho_even;
    }

    let mut t = 1;
    while t + 2 <= max_t {
        if rho_hat[t + 1] + rho_hat[t + 2] > rho_hat[t - 1] + rho_hat[t] {
            let v = (rho_hat[t - 1] + rho_hat[t]) / 2.0;
            rho_hat[t + 1] = v;
            rho_hat[t + 2] = v;
        }
        t += 2;
    }

    let total = (m * n) as f64;
    let tail = if max_t + 1 < n { rho_hat[max_t + 1] } else { 0.0 };
    let mut tau = -1.0 + 2.0 * rho_hat[..=max_t.min(n - 1)].iter().sum::<f64>() + tail;
    tau = tau.max(1.0 / total.log10());
    Some(total / tau)
}

/// Per-parameter convergence summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub names: Vec<String>,
    /// `None` marks an undefined statistic.
    pub rhat: Vec<Option<f64>>,
    pub ess_bulk: Vec<Option<f64>>,
    pub n_divergent: usize,
    pub n_draws: usize,
}

/// The threshold below which every R-hat must fall for a fit to count as
/// converged.
pub const RHAT_THRESHOLD: f64 = 1.1;

impl Diagnostics {
    /// `series[k]` holds `chains[c][i]` for parameter `k`.
    pub fn from_series(names: Vec<String>, series: &[Vec<Vec<f64>>], n_divergent: usize) -> Self {
        let rhat = series.iter().map(|s| compute_rhat(s)).collect();
        let ess_bulk = series.iter().map(|s| compute_ess(s)).collect();
        let n_draws = series.first().map_or(0, |s| s.iter().map(Vec::len).sum());
        Self {
            names,
            rhat,
            ess_bulk,
            n_divergent,
            n_draws,
        }
    }

    /// Largest R-hat; undefined entries count as infinite.
    pub fn max_rhat(&self) -> f64 {
        self.rhat
            .iter()
            .map(|r| r.unwrap_or(f64::INFINITY))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ess(&self) -> f64 {
        self.ess_bulk.iter().map(|e| e.unwrap_or(0.0)).fold(f64::INFINITY, f64::min)
    }

    /// All R-hat values defined and below [`RHAT_THRESHOLD`].
    pub fn converged(&self) -> bool {
        !self.rhat.is_empty() && self.max_rhat() < RHAT_THRESHOLD
    }

    /// Parameters whose R-hat is undefined or at/above the threshold.
    pub fn failing(&self) -> Vec<&str> {
        self.names
            .iter()
            .zip(&self.rhat)
            .filter(|(_, r)| !matches!(r, Some(v) if *v < RHAT_THRESHOLD))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    /// CSV with header `parameter,rhat,ess_bulk`; undefined values are
    /// written as `NA`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> crate::Result<()> {
        let fmt = |v: &Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["parameter", "rhat", "ess_bulk"])?;
        for ((n, r), e) in self.names.iter().zip(&self.rhat).zip(&self.ess_bulk) {
            w.write_record([n.clone(), fmt(r), fmt(e)])?;
        }
        w.flush()?;
        Ok(())
    }
}
