//! Data-driven starting points for fits of the coupled model.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{init_failure, stream_rng, ChainConfig, LogDensity, INIT_STREAM_OFFSET};
use crate::data::PanelDataset;
use crate::error::Result;
use crate::likelihood::LogPosterior;
use crate::math::mean;
use crate::model::{Parameters, StateSpace};
use crate::transforms::unconstrain;

pub const MAX_INIT_ATTEMPTS: usize = 100;

const MIN_GAP: f64 = 0.01;

/// Splits the pooled observations into `n_states` equal-count groups by
/// rank. Returns the group means (forced strictly increasing) and the
/// pooled within-group SD.
fn quantile_split(values: &[f64], n_states: usize) -> (Vec<f64>, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let mut means = Vec::with_capacity(n_states);
    let mut ss = 0.0;
    for s in 0..n_states {
        let lo = s * n / n_states;
        let hi = ((s + 1) * n / n_states).max(lo + 1).min(n);
        let group = &sorted[lo.min(n - 1)..hi];
        let m = mean(group);
        ss += group.iter().map(|v| (v - m).powi(2)).sum::<f64>();
        means.push(m);
    }
    // degenerate splits (ties) are spread out around their centre
    for s in 1..n_states {
        if means[s] - means[s - 1] < MIN_GAP {
            let centre = 0.5 * (means[s] + means[s - 1]);
            means[s - 1] = means[s - 1].min(centre - 0.5 * MIN_GAP);
            means[s] = centre + 0.5 * MIN_GAP;
        }
    }
    let dof = (n.saturating_sub(n_states)).max(1) as f64;
    let sd = (ss / dof).sqrt().max(MIN_GAP);
    (means, sd)
}

/// One starting point in constrained form: emission means from a
/// rank-based split of the pooled observations, SDs from the within-group
/// spread, a uniform initial distribution and `Uniform(-2, 2)` transition
/// intercepts and coefficients.
pub fn initial_parameters(
    data: &PanelDataset,
    space: StateSpace,
    rng: &mut ChaCha8Rng,
) -> Parameters {
    let y_a: Vec<f64> = data.patients.iter().flat_map(|p| p.y_a.iter().copied()).collect();
    let y_b: Vec<f64> = data.patients.iter().flat_map(|p| p.y_b.iter().copied()).collect();
    let (mu_a, sigma_a) = quantile_split(&y_a, space.n_a());
    let (mu_b, sigma_b) = quantile_split(&y_b, space.n_b());
    let mut params = Parameters::neutral(space, data.n_covariates());
    params.mu_a = mu_a;
    params.mu_b = mu_b;
    params.sigma_a = sigma_a;
    params.sigma_b = sigma_b;
    let g = space.n_global();
    for j in 0..g {
        for k in 0..g {
            if j == k {
                continue;
            }
            params.alpha[j][k] = rng.random_range(-2.0..2.0);
            for b in params.beta[j][k].iter_mut() {
                *b = rng.random_range(-2.0..2.0);
            }
        }
    }
    params
}

/// Unconstrained starting points, one per chain, each retried until the
/// log posterior is finite. Each chain draws its jitter from its own
/// stream.
pub fn initialize_chains(target: &LogPosterior, config: &ChainConfig) -> Result<Vec<Vec<f64>>> {
    let space = target.layout().space;
    let mut grad = vec![0.0; target.dim()];
    (0..config.n_chains)
        .map(|c| {
            let mut rng = stream_rng(config.seed, INIT_STREAM_OFFSET + c as u64);
            let mut tried = Vec::new();
            for _ in 0..MAX_INIT_ATTEMPTS {
                let theta = unconstrain(&initial_parameters(target.data(), space, &mut rng))?;
                if target.logp_and_grad(&theta, &mut grad).is_finite() {
                    return Ok(theta);
                }
                tried.push(theta);
            }
            Err(init_failure(c, &tried))
        })
        .collect()
}
