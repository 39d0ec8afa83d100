use serde::{Deserialize, Serialize};

use super::StateSpace;
use crate::error::{Error, Result};

/// Constrained model parameters.
///
/// `alpha[j][k]` is the intercept of the `j -> k` global transition and
/// `beta[j][k]` its covariate coefficients (length `p`). Both are stored
/// densely; the diagonal is the reference category and must be zero.
///
/// Fields are public so that tests can build deliberately invalid
/// instances. Everything that consumes parameters assumes
/// [`Parameters::validate`] has passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub mu_a: Vec<f64>,
    pub mu_b: Vec<f64>,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub pi: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<Vec<f64>>>,
}

const SIMPLEX_TOL: f64 = 1e-12;

impl Parameters {
    /// All-neutral parameters: unit-gap means starting at 0, unit SDs,
    /// uniform initial distribution and zero transition logits.
    pub fn neutral(space: StateSpace, n_covariates: usize) -> Self {
        let g = space.n_global();
        Self {
            mu_a: (0..space.n_a()).map(|s| s as f64).collect(),
            mu_b: (0..space.n_b()).map(|s| s as f64).collect(),
            sigma_a: 1.0,
            sigma_b: 1.0,
            pi: vec![1.0 / g as f64; g],
            alpha: vec![vec![0.0; g]; g],
            beta: vec![vec![vec![0.0; n_covariates]; g]; g],
        }
    }

    pub fn space(&self) -> Result<StateSpace> {
        StateSpace::new(self.mu_a.len(), self.mu_b.len())
    }

    pub fn n_covariates(&self) -> usize {
        self.beta
            .first()
            .and_then(|row| row.first())
            .map_or(0, Vec::len)
    }

    /// Checks every structural and ordering invariant.
    pub fn validate(&self) -> Result<StateSpace> {
        let space = self.space()?;
        let g = space.n_global();
        let p = self.n_covariates();

        check_ordered("mu_a", &self.mu_a)?;
        check_ordered("mu_b", &self.mu_b)?;
        for (name, s) in [("sigma_a", self.sigma_a), ("sigma_b", self.sigma_b)] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {s}")));
            }
        }

        if self.pi.len() != g {
            return Err(Error::validation(format!(
                "pi has length {}, expected {g}",
                self.pi.len()
            )));
        }
        if self.pi.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::validation("pi entries must be finite and >= 0"));
        }
        let total: f64 = self.pi.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::validation(format!("pi sums to {total}, not 1")));
        }

        if self.alpha.len() != g || self.alpha.iter().any(|r| r.len() != g) {
            return Err(Error::validation(format!("alpha must be {g}x{g}")));
        }
        if self.beta.len() != g
            || self
                .beta
                .iter()
                .any(|r| r.len() != g || r.iter().any(|c| c.len() != p))
        {
            return Err(Error::validation(format!("beta must be {g}x{g}x{p}")));
        }
        for j in 0..g {
            if self.alpha[j][j] != 0.0 {
                return Err(Error::validation(format!(
                    "alpha[{j}][{j}] must be 0 (reference category)"
                )));
            }
            if self.beta[j][j].iter().any(|&b| b != 0.0) {
                return Err(Error::validation(format!(
                    "beta[{j}][{j}] must be 0 (reference category)"
                )));
            }
            for k in 0..g {
                if !self.alpha[j][k].is_finite() || self.beta[j][k].iter().any(|b| !b.is_finite()) {
                    return Err(Error::validation(format!(
                        "non-finite transition parameter at ({j},{k})"
                    )));
                }
            }
        }
        Ok(space)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Parameters = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_ordered(name: &str, mu: &[f64]) -> Result<()> {
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(Error::validation(format!("{name} must be finite")));
    }
    if mu.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation(format!(
            "{name} must be strictly increasing, got {mu:?}"
        )));
    }
    Ok(())
}
