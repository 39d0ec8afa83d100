//! Log-space forward recursion over global states, with its adjoint.
//!
//! The transition into step `t` uses the covariate row of step `t - 1`.
//! The gradient comes from the forward-backward marginals: the derivative
//! of the log-likelihood with respect to an emission log-density at
//! `(t, g)` is the smoothed state probability, and with respect to
//! `ln Gamma_t[j][k]` it is the smoothed pair probability.

use crate::data::PatientSeries;
use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::model::{log_gamma_into, normal_logpdf, Parameters, StateSpace};
use crate::transforms::{ParamGradient, ParamLayout};

/// Log-likelihood of one patient's full series.
pub fn forward_loglik_patient(params: &Parameters, patient: &PatientSeries) -> Result<f64> {
    let space = params.validate()?;
    check_patient(params, patient)?;
    let log_pi: Vec<f64> = params.pi.iter().map(|p| p.ln()).collect();
    let pass = ForwardPass::run(params, &log_pi, space, patient);
    if let Some(t) = pass.first_nonfinite {
        return Err(Error::numeric(format!(
            "forward recursion for patient '{}' became non-finite at t={}",
            patient.id,
            t + 1
        )));
    }
    Ok(pass.loglik)
}

pub(crate) fn check_patient(params: &Parameters, patient: &PatientSeries) -> Result<()> {
    let n = patient.len();
    if n == 0 {
        return Err(Error::validation(format!("patient '{}' has no observations", patient.id)));
    }
    if patient.y_b.len() != n || patient.x.len() != n {
        return Err(Error::validation(format!("patient '{}' has ragged columns", patient.id)));
    }
    let p = params.n_covariates();
    if let Some(t) = patient.x.iter().position(|r| r.len() != p) {
        return Err(Error::validation(format!(
            "patient '{}' covariate row at t={} has length {}, model expects {p}",
            patient.id,
            t + 1,
            patient.x[t].len()
        )));
    }
    Ok(())
}

/// Emission log-densities `e[t * G + g]` of both channels.
fn emission_table(params: &Parameters, space: StateSpace, patient: &PatientSeries) -> Vec<f64> {
    let g_n = space.n_global();
    let t_n = patient.len();
    let mut e = vec![0.0; t_n * g_n];
    for t in 0..t_n {
        let la: Vec<f64> = params
            .mu_a
            .iter()
            .map(|&m| normal_logpdf(patient.y_a[t], m, params.sigma_a))
            .collect();
        let lb: Vec<f64> = params
            .mu_b
            .iter()
            .map(|&m| normal_logpdf(patient.y_b[t], m, params.sigma_b))
            .collect();
        for g in 0..g_n {
            e[t * g_n + g] = la[space.state_a(g)] + lb[space.state_b(g)];
        }
    }
    e
}

pub(crate) struct ForwardPass {
    pub loglik: f64,
    pub first_nonfinite: Option<usize>,
    n_global: usize,
    emission: Vec<f64>,
    log_gamma: Vec<f64>,
    log_alpha: Vec<f64>,
}

impl ForwardPass {
    pub(crate) fn run(params: &Parameters, log_pi: &[f64], space: StateSpace, patient: &PatientSeries) -> Self {
        let g_n = space.n_global();
        let t_n = patient.len();
        let emission = emission_table(params, space, patient);
        let mut log_gamma = vec![0.0; t_n.saturating_sub(1) * g_n * g_n];
        for t in 0..t_n.saturating_sub(1) {
            log_gamma_into(
                &params.alpha,
                &params.beta,
                &patient.x[t],
                &mut log_gamma[t * g_n * g_n..(t + 1) * g_n * g_n],
            );
        }

        let mut log_alpha = vec![0.0; t_n * g_n];
        let mut first_nonfinite = None;
        for g in 0..g_n {
            log_alpha[g] = log_pi[g] + emission[g];
        }
        let mut buf = vec![0.0; g_n];
        for t in 1..t_n {
            let lg = &log_gamma[(t - 1) * g_n * g_n..t * g_n * g_n];
            for k in 0..g_n {
                for j in 0..g_n {
                    buf[j] = log_alpha[(t - 1) * g_n + j] + lg[j * g_n + k];
                }
                log_alpha[t * g_n + k] = log_sum_exp(&buf) + emission[t * g_n + k];
            }
            if first_nonfinite.is_none()
                && (log_alpha[t * g_n..(t + 1) * g_n].iter().any(|v| v.is_nan())
                    || log_alpha[t * g_n..(t + 1) * g_n].iter().all(|v| !v.is_finite()))
            {
                first_nonfinite = Some(t);
            }
        }
        let loglik = log_sum_exp(&log_alpha[(t_n - 1) * g_n..]);
        if first_nonfinite.is_none() && !loglik.is_finite() {
            first_nonfinite = Some(t_n - 1);
        }
        Self {
            loglik,
            first_nonfinite,
            n_global: g_n,
            emission,
            log_gamma,
            log_alpha,
        }
    }

    /// Accumulates the gradient of this patient's log-likelihood into `grad`.
    pub(crate) fn accumulate_gradient(
        &self,
        params: &Parameters,
        space: StateSpace,
        layout: &ParamLayout,
        patient: &PatientSeries,
        grad: &mut ParamGradient,
    ) {
        let g_n = self.n_global;
        let t_n = patient.len();
        let p = layout.n_covariates;
        let ll = self.loglik;

        let mut log_beta = vec![0.0; t_n * g_n];
        let mut buf = vec![0.0; g_n];
        for t in (0..t_n - 1).rev() {
            let lg = &self.log_gamma[t * g_n * g_n..(t + 1) * g_n * g_n];
            for j in 0..g_n {
                for k in 0..g_n {
                    buf[k] = lg[j * g_n + k] + self.emission[(t + 1) * g_n + k] + log_beta[(t + 1) * g_n + k];
                }
                log_beta[t * g_n + j] = log_sum_exp(&buf);
            }
        }

        // state marginals
        let inv_va = 1.0 / (params.sigma_a * params.sigma_a);
        let inv_vb = 1.0 / (params.sigma_b * params.sigma_b);
        for t in 0..t_n {
            for g in 0..g_n {
                let w = (self.log_alpha[t * g_n + g] + log_beta[t * g_n + g] - ll).exp();
                if w == 0.0 {
                    continue;
                }
                if t == 0 {
                    grad.log_pi[g] += w;
                }
                let sa = space.state_a(g);
                let sb = space.state_b(g);
                let ra = patient.y_a[t] - params.mu_a[sa];
                let rb = patient.y_b[t] - params.mu_b[sb];
                grad.mu_a[sa] += w * ra * inv_va;
                grad.mu_b[sb] += w * rb * inv_vb;
                grad.sigma_a += w * (ra * ra * inv_va - 1.0) / params.sigma_a;
                grad.sigma_b += w * (rb * rb * inv_vb - 1.0) / params.sigma_b;
            }
        }

        // pair marginals -> logits
        let mut xi = vec![0.0; g_n];
        for t in 0..t_n - 1 {
            let lg = &self.log_gamma[t * g_n * g_n..(t + 1) * g_n * g_n];
            let x = &patient.x[t];
            let mut idx = 0;
            for j in 0..g_n {
                let la = self.log_alpha[t * g_n + j];
                let mut row_sum = 0.0;
                for k in 0..g_n {
                    xi[k] = (la + lg[j * g_n + k] + self.emission[(t + 1) * g_n + k]
                        + log_beta[(t + 1) * g_n + k]
                        - ll)
                        .exp();
                    row_sum += xi[k];
                }
                for k in 0..g_n {
                    if k == j {
                        continue;
                    }
                    let d = xi[k] - lg[j * g_n + k].exp() * row_sum;
                    grad.alpha[idx] += d;
                    let b = &mut grad.beta[idx * p..(idx + 1) * p];
                    for c in 0..p {
                        b[c] += d * x[c];
                    }
                    idx += 1;
                }
            }
        }
    }
}

/// Log-likelihood and gradient of one patient with respect to the
/// constrained quantities (see [`ParamGradient`]).
pub fn patient_loglik_gradient(
    params: &Parameters,
    log_pi: &[f64],
    layout: &ParamLayout,
    patient: &PatientSeries,
) -> (f64, ParamGradient) {
    let mut grad = ParamGradient::zeros(layout);
    let pass = ForwardPass::run(params, log_pi, layout.space, patient);
    if pass.loglik.is_finite() {
        pass.accumulate_gradient(params, layout.space, layout, patient, &mut grad);
    }
    (pass.loglik, grad)
}
