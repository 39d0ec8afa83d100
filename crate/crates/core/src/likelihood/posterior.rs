//! Log posterior in the unconstrained space and its exact gradient.
//!
//! The dataset handed to these functions must already be in sampler
//! coordinates: its covariate rows are the ones the `beta` block of the
//! unconstrained vector multiplies (the rotated design during a fit).

use rayon::prelude::*;

use super::forward::{check_patient, ForwardPass};
use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::sampler::LogDensity;
use crate::transforms::{
    constrain_full, log_prior, log_prior_gradient, pullback, Constrained, ParamGradient, ParamLayout,
};

/// The three additive pieces of the log posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorTerms {
    pub log_likelihood: f64,
    pub log_prior: f64,
    pub log_jacobian: f64,
    /// Sum of the three, or `-inf` when any piece is not finite.
    pub total: f64,
    pub finite: bool,
}

fn check_data(data: &PanelDataset, layout: &ParamLayout, c: &Constrained) -> Result<()> {
    if data.n_covariates() != layout.n_covariates {
        return Err(Error::validation(format!(
            "dataset has {} covariates, model expects {}",
            data.n_covariates(),
            layout.n_covariates
        )));
    }
    for p in &data.patients {
        check_patient(&c.params, p)?;
    }
    Ok(())
}

pub fn total_log_posterior(theta: &[f64], data: &PanelDataset, layout: &ParamLayout) -> Result<PosteriorTerms> {
    let c = constrain_full(theta, layout)?;
    check_data(data, layout, &c)?;
    let lls: Vec<f64> = data
        .patients
        .iter()
        .map(|p| ForwardPass::run(&c.params, &c.log_pi, layout.space, p).loglik)
        .collect();
    Ok(assemble(lls.iter().sum(), &c))
}

fn assemble(log_likelihood: f64, c: &Constrained) -> PosteriorTerms {
    let lp = log_prior(&c.params);
    let sum = log_likelihood + lp + c.log_jacobian;
    let finite = sum.is_finite();
    PosteriorTerms {
        log_likelihood,
        log_prior: lp,
        log_jacobian: c.log_jacobian,
        total: if finite { sum } else { f64::NEG_INFINITY },
        finite,
    }
}

/// Exact gradient of [`total_log_posterior`] with respect to `theta`.
pub fn grad_log_posterior(theta: &[f64], data: &PanelDataset, layout: &ParamLayout) -> Result<Vec<f64>> {
    let c = constrain_full(theta, layout)?;
    check_data(data, layout, &c)?;
    let (terms, grad) = value_and_gradient(theta, data, layout, &c, false);
    if !terms.finite {
        return Err(Error::numeric("log posterior is not finite at this point"));
    }
    Ok(grad)
}

fn value_and_gradient(
    theta: &[f64],
    data: &PanelDataset,
    layout: &ParamLayout,
    c: &Constrained,
    parallel: bool,
) -> (PosteriorTerms, Vec<f64>) {
    let per_patient = |p: &crate::data::PatientSeries| {
        let pass = ForwardPass::run(&c.params, &c.log_pi, layout.space, p);
        let mut g = ParamGradient::zeros(layout);
        if pass.loglik.is_finite() {
            pass.accumulate_gradient(&c.params, layout.space, layout, p, &mut g);
        }
        (pass.loglik, g)
    };
    // collected in patient order, then reduced sequentially, so the result
    // does not depend on the thread count
    let parts: Vec<(f64, ParamGradient)> = if parallel {
        data.patients.par_iter().map(per_patient).collect()
    } else {
        data.patients.iter().map(per_patient).collect()
    };
    let mut grad = log_prior_gradient(&c.params, layout);
    let mut ll = 0.0;
    for (v, g) in &parts {
        ll += v;
        grad.add_assign(g);
    }
    let terms = assemble(ll, c);
    (terms, pullback(theta, layout, &grad))
}

/// Log posterior of the coupled model as a sampler target.
#[derive(Debug, Clone)]
pub struct LogPosterior {
    layout: ParamLayout,
    data: PanelDataset,
    parallel: bool,
}

impl LogPosterior {
    /// `data` must be in sampler coordinates and match the layout.
    pub fn new(layout: ParamLayout, data: PanelDataset) -> Result<Self> {
        if data.n_covariates() != layout.n_covariates {
            return Err(Error::validation(format!(
                "dataset has {} covariates, model expects {}",
                data.n_covariates(),
                layout.n_covariates
            )));
        }
        data.validate()?;
        Ok(Self {
            layout,
            data,
            parallel: false,
        })
    }

    /// Evaluate patients on the rayon pool. Off by default: chains already
    /// run in parallel.
    pub fn with_parallel_patients(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn data(&self) -> &PanelDataset {
        &self.data
    }
}

impl LogDensity for LogPosterior {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn logp_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        if position.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let c = match constrain_full(position, &self.layout) {
            Ok(c) => c,
            Err(_) => return f64::NEG_INFINITY,
        };
        let (terms, g) = value_and_gradient(position, &self.data, &self.layout, &c, self.parallel);
        if !terms.finite || g.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        grad.copy_from_slice(&g);
        terms.total
    }

    fn param_names(&self) -> Vec<String> {
        self.layout.unconstrained_names(&self.data.covariate_names)
    }
}
