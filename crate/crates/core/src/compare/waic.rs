use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::PointwiseLogLik;
use crate::math::{log_mean_exp, variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waic {
    pub elpd_waic: f64,
    pub se_elpd_waic: f64,
    pub p_waic: f64,
    /// Deviance scale, `-2 * elpd_waic`; lower is better.
    pub waic: f64,
    pub pointwise: Vec<f64>,
}

/// Widely-applicable information criterion with the patient as the
/// pointwise unit. With a single draw the penalty is zero.
pub fn waic(pw: &PointwiseLogLik) -> Result<Waic> {
    if pw.n_draws() == 0 || pw.n_patients() == 0 {
        return Err(Error::validation("pointwise log-likelihood is empty"));
    }
    if pw.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::numeric("pointwise log-likelihood contains non-finite entries"));
    }
    let mut pointwise = Vec::with_capacity(pw.n_patients());
    let mut p_waic = 0.0;
    for i in 0..pw.n_patients() {
        let col = pw.column(i);
        let p = if col.len() > 1 { variance(&col) } else { 0.0 };
        p_waic += p;
        pointwise.push(log_mean_exp(&col) - p);
    }
    let elpd_waic: f64 = pointwise.iter().sum();
    Ok(Waic {
        elpd_waic,
        se_elpd_waic: pointwise_se(&pointwise),
        p_waic,
        waic: -2.0 * elpd_waic,
        pointwise,
    })
}

/// `sqrt(N * var)` over the pointwise contributions.
pub(crate) fn pointwise_se(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    (values.len() as f64 * variance(values)).sqrt()
}
