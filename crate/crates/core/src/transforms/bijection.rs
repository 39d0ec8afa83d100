//! Map between constrained [`Parameters`] and the unconstrained sampler
//! space.
//!
//! * ordered means: first mean, then the log of each positive gap;
//! * standard deviations: log;
//! * initial distribution: stick-breaking with logistic breaks, offset so
//!   that the zero vector maps to the uniform simplex;
//! * transition intercepts and coefficients pass through.
//!
//! Coefficients in this space act on the QR-rotated covariates, i.e. they
//! are the `beta_tilde` of the sampler.

use super::ParamLayout;
use crate::error::{Error, Result};
use crate::math::{logistic, softplus};
use crate::model::Parameters;

/// Output of [`constrain_full`]: parameters, the exact `log pi` (kept
/// separately so tiny probabilities do not lose precision) and the log
/// absolute Jacobian determinant of the inverse transform.
#[derive(Debug, Clone)]
pub struct Constrained {
    pub params: Parameters,
    pub log_pi: Vec<f64>,
    pub log_jacobian: f64,
}

/// Gradient of some scalar function with respect to the constrained
/// quantities. `log_pi` is the gradient with respect to `ln pi`; `alpha`
/// and `beta` follow the layout's off-diagonal order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    pub mu_a: Vec<f64>,
    pub mu_b: Vec<f64>,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub log_pi: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ParamGradient {
    pub fn zeros(layout: &ParamLayout) -> Self {
        Self {
            mu_a: vec![0.0; layout.space.n_a()],
            mu_b: vec![0.0; layout.space.n_b()],
            sigma_a: 0.0,
            sigma_b: 0.0,
            log_pi: vec![0.0; layout.n_global()],
            alpha: vec![0.0; layout.n_offdiag()],
            beta: vec![0.0; layout.n_offdiag() * layout.n_covariates],
        }
    }

    pub fn add_assign(&mut self, other: &ParamGradient) {
        add(&mut self.mu_a, &other.mu_a);
        add(&mut self.mu_b, &other.mu_b);
        self.sigma_a += other.sigma_a;
        self.sigma_b += other.sigma_b;
        add(&mut self.log_pi, &other.log_pi);
        add(&mut self.alpha, &other.alpha);
        add(&mut self.beta, &other.beta);
    }
}

fn add(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Inverse transform: unconstrained vector to parameters plus log Jacobian.
pub fn constrain(theta: &[f64], layout: &ParamLayout) -> Result<(Parameters, f64)> {
    constrain_full(theta, layout).map(|c| (c.params, c.log_jacobian))
}

pub fn constrain_full(theta: &[f64], layout: &ParamLayout) -> Result<Constrained> {
    if theta.len() != layout.dim() {
        return Err(Error::validation(format!(
            "unconstrained vector has length {}, layout expects {}",
            theta.len(),
            layout.dim()
        )));
    }
    let space = layout.space;
    let g = layout.n_global();
    let p = layout.n_covariates;
    let mut log_jacobian = 0.0;

    let mu_a = ordered(&theta[layout.mu_a()..layout.mu_a() + space.n_a()], &mut log_jacobian);
    let mu_b = ordered(&theta[layout.mu_b()..layout.mu_b() + space.n_b()], &mut log_jacobian);
    let ls_a = theta[layout.log_sigma_a()];
    let ls_b = theta[layout.log_sigma_b()];
    log_jacobian += ls_a + ls_b;

    let log_pi = stick_breaking(&theta[layout.pi()..layout.pi() + g - 1], &mut log_jacobian);
    let pi = log_pi.iter().map(|v| v.exp()).collect();

    let mut alpha = vec![vec![0.0; g]; g];
    let mut beta = vec![vec![vec![0.0; p]; g]; g];
    for (idx, (j, k)) in layout.offdiag_pairs().enumerate() {
        alpha[j][k] = theta[layout.alpha() + idx];
        let off = layout.beta() + idx * p;
        beta[j][k].copy_from_slice(&theta[off..off + p]);
    }

    Ok(Constrained {
        params: Parameters {
            mu_a,
            mu_b,
            sigma_a: ls_a.exp(),
            sigma_b: ls_b.exp(),
            pi,
            alpha,
            beta,
        },
        log_pi,
        log_jacobian,
    })
}

fn ordered(theta: &[f64], log_jacobian: &mut f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(theta.len());
    let mut acc = theta[0];
    out.push(acc);
    for &d in &theta[1..] {
        acc += d.exp();
        *log_jacobian += d;
        out.push(acc);
    }
    out
}

#[inline]
fn stick_offset(k: usize, n_simplex: usize) -> f64 {
    ((n_simplex - 1 - k) as f64).ln()
}

/// Stick-breaking in log space. Returns `ln pi` of length `y.len() + 1`.
fn stick_breaking(y: &[f64], log_jacobian: &mut f64) -> Vec<f64> {
    let n = y.len() + 1;
    let mut log_pi = Vec::with_capacity(n);
    let mut log_stick = 0.0;
    for (k, &yk) in y.iter().enumerate() {
        let u = yk - stick_offset(k, n);
        let lz = -softplus(-u);
        let l1z = -softplus(u);
        log_pi.push(log_stick + lz);
        *log_jacobian += lz + l1z + log_stick;
        log_stick += l1z;
    }
    log_pi.push(log_stick);
    log_pi
}

/// Forward transform: parameters to the unconstrained vector. The layout
/// is inferred from the parameter shapes.
pub fn unconstrain(params: &Parameters) -> Result<Vec<f64>> {
    let space = params.validate()?;
    let layout = ParamLayout::new(space, params.n_covariates());
    let mut theta = vec![0.0; layout.dim()];

    unorder(&params.mu_a, &mut theta[layout.mu_a()..layout.mu_a() + space.n_a()]);
    unorder(&params.mu_b, &mut theta[layout.mu_b()..layout.mu_b() + space.n_b()]);
    theta[layout.log_sigma_a()] = params.sigma_a.ln();
    theta[layout.log_sigma_b()] = params.sigma_b.ln();

    let g = layout.n_global();
    let mut stick = 1.0;
    for k in 0..g - 1 {
        let z = (params.pi[k] / stick).clamp(0.0, 1.0);
        theta[layout.pi() + k] = z.ln() - (-z).ln_1p() + stick_offset(k, g);
        stick -= params.pi[k];
    }

    let p = layout.n_covariates;
    for (idx, (j, k)) in layout.offdiag_pairs().enumerate() {
        theta[layout.alpha() + idx] = params.alpha[j][k];
        let off = layout.beta() + idx * p;
        theta[off..off + p].copy_from_slice(&params.beta[j][k]);
    }
    Ok(theta)
}

fn unorder(mu: &[f64], out: &mut [f64]) {
    out[0] = mu[0];
    for s in 1..mu.len() {
        out[s] = (mu[s] - mu[s - 1]).ln();
    }
}

/// Chain rule through the inverse transform.
///
/// Returns the gradient with respect to `theta` of
/// `F(constrain(theta)) + log_jacobian(theta)`, given the gradient of `F`
/// with respect to the constrained quantities.
pub fn pullback(theta: &[f64], layout: &ParamLayout, grad: &ParamGradient) -> Vec<f64> {
    let mut out = vec![0.0; layout.dim()];
    let space = layout.space;

    pull_ordered(
        &theta[layout.mu_a()..layout.mu_a() + space.n_a()],
        &grad.mu_a,
        &mut out[layout.mu_a()..layout.mu_a() + space.n_a()],
    );
    pull_ordered(
        &theta[layout.mu_b()..layout.mu_b() + space.n_b()],
        &grad.mu_b,
        &mut out[layout.mu_b()..layout.mu_b() + space.n_b()],
    );
    out[layout.log_sigma_a()] = grad.sigma_a * theta[layout.log_sigma_a()].exp() + 1.0;
    out[layout.log_sigma_b()] = grad.sigma_b * theta[layout.log_sigma_b()].exp() + 1.0;

    let g = layout.n_global();
    pull_stick(
        &theta[layout.pi()..layout.pi() + g - 1],
        &grad.log_pi,
        &mut out[layout.pi()..layout.pi() + g - 1],
    );

    out[layout.alpha()..layout.beta()].copy_from_slice(&grad.alpha);
    out[layout.beta()..].copy_from_slice(&grad.beta);
    out
}

fn pull_ordered(theta: &[f64], g_mu: &[f64], out: &mut [f64]) {
    // d mu_s / d theta_0 = 1; d mu_s / d theta_r = exp(theta_r) for s >= r >= 1
    let mut tail = 0.0;
    for r in (0..theta.len()).rev() {
        tail += g_mu[r];
        out[r] = if r == 0 { tail } else { tail * theta[r].exp() + 1.0 };
    }
}

fn pull_stick(y: &[f64], g_log_pi: &[f64], out: &mut [f64]) {
    let n = y.len() + 1;
    if y.is_empty() {
        return;
    }
    // adjoint of ln(stick_{k+1}); ln(stick_{n-1}) is ln(pi_{n-1}) itself
    let mut bar_log_stick = g_log_pi[n - 1];
    for k in (0..n - 1).rev() {
        let u = y[k] - stick_offset(k, n);
        let z = logistic(u);
        let bar_lz = g_log_pi[k] + 1.0;
        let bar_l1z = bar_log_stick + 1.0;
        out[k] = bar_lz * (1.0 - z) - bar_l1z * z;
        bar_log_stick += g_log_pi[k] + 1.0;
    }
}

/// Constrained parameters flattened in the order of
/// [`ParamLayout::reported_names`].
pub fn flatten_reported(params: &Parameters) -> Vec<f64> {
    let g = params.pi.len();
    let mut out = Vec::new();
    out.extend_from_slice(&params.mu_a);
    out.extend_from_slice(&params.mu_b);
    out.push(params.sigma_a);
    out.push(params.sigma_b);
    out.extend_from_slice(&params.pi);
    for j in 0..g {
        for k in 0..g {
            if j != k {
                out.push(params.alpha[j][k]);
            }
        }
    }
    for j in 0..g {
        for k in 0..g {
            if j != k {
                out.extend_from_slice(&params.beta[j][k]);
            }
        }
    }
    out
}

/// Inverse of [`flatten_reported`] for the given layout.
pub fn unflatten_reported(values: &[f64], layout: &ParamLayout) -> Result<Parameters> {
    let expected = layout.reported_names(&[]).len();
    if values.len() != expected {
        return Err(Error::validation(format!(
            "reported vector has length {}, layout expects {expected}",
            values.len()
        )));
    }
    let space = layout.space;
    let p = layout.n_covariates;
    let mut params = Parameters::neutral(space, p);
    let mut it = values.iter().copied();
    let mut take = |n: usize| -> Vec<f64> { (&mut it).take(n).collect() };
    params.mu_a = take(space.n_a());
    params.mu_b = take(space.n_b());
    params.sigma_a = take(1)[0];
    params.sigma_b = take(1)[0];
    params.pi = take(layout.n_global());
    let pairs: Vec<(usize, usize)> = layout.offdiag_pairs().collect();
    for &(j, k) in &pairs {
        params.alpha[j][k] = take(1)[0];
    }
    for &(j, k) in &pairs {
        params.beta[j][k] = take(p);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn layout(p: usize) -> ParamLayout {
        ParamLayout::new(StateSpace::coupled(), p)
    }

    #[test]
    fn zero_vector_is_neutral_point() {
        let l = layout(2);
        let (params, _) = constrain(&vec![0.0; l.dim()], &l).unwrap();
        assert_eq!(params.mu_a, vec![0.0, 1.0]);
        assert_eq!(params.mu_b, vec![0.0, 1.0]);
        assert_eq!(params.sigma_a, 1.0);
        assert_eq!(params.sigma_b, 1.0);
        for v in &params.pi {
            assert!((v - 0.25).abs() < 1e-15);
        }
        assert_eq!(params, {
            let mut n = Parameters::neutral(StateSpace::coupled(), 2);
            n.pi = params.pi.clone();
            n
        });
    }

    #[test]
    fn ordered_means_transform() {
        let mut params = Parameters::neutral(StateSpace::coupled(), 0);
        params.mu_a = vec![4.55, 4.70];
        let theta = unconstrain(&params).unwrap();
        assert_eq!(theta[0], 4.55);
        assert!((theta[1] - 0.15f64.ln()).abs() < 1e-12);
        assert!((theta[1] + 1.8971).abs() < 1e-4);
    }

    #[test]
    fn uniform_pi_maps_to_zero_sticks() {
        let params = Parameters::neutral(StateSpace::coupled(), 0);
        let theta = unconstrain(&params).unwrap();
        let l = layout(0);
        for v in &theta[l.pi()..l.pi() + 3] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn any_theta_gives_valid_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = layout(2);
        for _ in 0..200 {
            let theta: Vec<f64> = (0..l.dim()).map(|_| rng.random_range(-8.0..8.0)).collect();
            let (params, lj) = constrain(&theta, &l).unwrap();
            params.validate().unwrap();
            assert!(lj.is_finite());
        }
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(constrain(&[0.0; 3], &layout(1)).is_err());
    }

    #[test]
    fn flatten_matches_reported_names() {
        let l = layout(2);
        let params = Parameters::neutral(StateSpace::coupled(), 2);
        assert_eq!(flatten_reported(&params).len(), l.reported_names(&[]).len());
    }
}
