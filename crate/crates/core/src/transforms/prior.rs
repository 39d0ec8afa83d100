//! Log-prior density of the constrained parameters.
//!
//! | block        | prior              |
//! |--------------|--------------------|
//! | emission mu  | Normal(0, 10^2)    |
//! | emission sd  | half-Normal(0, 1)  |
//! | pi           | Dirichlet(1, ..., 1) |
//! | alpha        | Normal(0, 2.5^2)   |
//! | beta-tilde   | Normal(0, 1)       |
//!
//! Jacobian terms of the unconstrained transform are not included here.

use super::{ParamGradient, ParamLayout};
use crate::math::LN_SQRT_2PI;
use crate::model::Parameters;

pub const MU_PRIOR_SD: f64 = 10.0;
pub const ALPHA_PRIOR_SD: f64 = 2.5;
pub const BETA_PRIOR_SD: f64 = 1.0;

fn normal_lp(x: f64, sd: f64) -> f64 {
    let z = x / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

fn half_normal_lp(x: f64) -> f64 {
    std::f64::consts::LN_2 - 0.5 * x * x - LN_SQRT_2PI
}

/// `ln Gamma(k)` of the flat Dirichlet normalizer, for integer `k >= 1`.
fn ln_flat_dirichlet_norm(k: usize) -> f64 {
    (1..k).map(|i| (i as f64).ln()).sum()
}

/// Log prior. `params.beta` holds the sampler-space coefficients
/// (`beta_tilde`).
pub fn log_prior(params: &Parameters) -> f64 {
    let g = params.pi.len();
    let mut lp = 0.0;
    lp += params.mu_a.iter().chain(&params.mu_b).map(|&m| normal_lp(m, MU_PRIOR_SD)).sum::<f64>();
    lp += half_normal_lp(params.sigma_a) + half_normal_lp(params.sigma_b);
    lp += ln_flat_dirichlet_norm(g);
    for j in 0..g {
        for k in 0..g {
            if j == k {
                continue;
            }
            lp += normal_lp(params.alpha[j][k], ALPHA_PRIOR_SD);
            lp += params.beta[j][k].iter().map(|&b| normal_lp(b, BETA_PRIOR_SD)).sum::<f64>();
        }
    }
    lp
}

/// Gradient of [`log_prior`] with respect to the constrained quantities.
pub fn log_prior_gradient(params: &Parameters, layout: &ParamLayout) -> ParamGradient {
    let mut grad = ParamGradient::zeros(layout);
    let v_mu = MU_PRIOR_SD * MU_PRIOR_SD;
    for (g, m) in grad.mu_a.iter_mut().zip(&params.mu_a) {
        *g = -m / v_mu;
    }
    for (g, m) in grad.mu_b.iter_mut().zip(&params.mu_b) {
        *g = -m / v_mu;
    }
    grad.sigma_a = -params.sigma_a;
    grad.sigma_b = -params.sigma_b;
    let p = layout.n_covariates;
    let v_alpha = ALPHA_PRIOR_SD * ALPHA_PRIOR_SD;
    let v_beta = BETA_PRIOR_SD * BETA_PRIOR_SD;
    for (idx, (j, k)) in layout.offdiag_pairs().enumerate() {
        grad.alpha[idx] = -params.alpha[j][k] / v_alpha;
        for c in 0..p {
            grad.beta[idx * p + c] = -params.beta[j][k][c] / v_beta;
        }
    }
    grad
}
