use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::psis::{psis_loo, ParetoKCounts};
use super::waic::{pointwise_se, waic};
use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::fit::{fit_model, Fit};
use crate::likelihood::{pointwise_loglik, PointwiseLogLik};
use crate::model::StateSpace;
use crate::sampler::ChainConfig;

/// The coupled model and the two single-chain simplifications.
pub const DEFAULT_VARIANTS: [(usize, usize); 3] = [(2, 2), (1, 2), (2, 1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantMetrics {
    pub elpd_loo: f64,
    pub se_elpd_loo: f64,
    pub p_loo: f64,
    pub elpd_waic: f64,
    pub se_elpd_waic: f64,
    pub p_waic: f64,
    pub waic: f64,
    pub pareto_k: ParetoKCounts,
    /// `elpd_loo` of the best row minus this row's, and the standard
    /// error of the paired patient-wise differences.
    pub elpd_diff: f64,
    pub se_diff: f64,
    #[serde(skip)]
    pointwise_loo: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub n_a: usize,
    pub n_b: usize,
    /// Whether both diseases have latent dynamics that can interact.
    pub disease_interactions: bool,
    pub converged: bool,
    pub max_rhat: Option<f64>,
    pub metrics: Option<VariantMetrics>,
    pub error: Option<String>,
}

impl CompareRow {
    pub fn label(&self) -> String {
        format!("({},{})", self.n_a, self.n_b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Index of the row with the highest `elpd_loo`.
    pub best: Option<usize>,
}

/// Input for one row of a comparison.
pub struct VariantOutcome {
    pub space: StateSpace,
    pub converged: bool,
    pub max_rhat: Option<f64>,
    pub pointwise: Result<PointwiseLogLik>,
}

fn metrics(pw: &PointwiseLogLik) -> Result<VariantMetrics> {
    let loo = psis_loo(pw)?;
    let w = waic(pw)?;
    Ok(VariantMetrics {
        elpd_loo: loo.elpd_loo,
        se_elpd_loo: loo.se_elpd_loo,
        p_loo: loo.p_loo,
        elpd_waic: w.elpd_waic,
        se_elpd_waic: w.se_elpd_waic,
        p_waic: w.p_waic,
        waic: w.waic,
        pareto_k: loo.k_counts,
        elpd_diff: 0.0,
        se_diff: 0.0,
        pointwise_loo: loo.pointwise,
    })
}

impl CompareReport {
    pub fn from_outcomes(outcomes: Vec<VariantOutcome>) -> Self {
        let mut rows: Vec<CompareRow> = outcomes
            .into_iter()
            .map(|o| {
                let (metrics, error) = match o.pointwise.and_then(|pw| metrics(&pw)) {
                    Ok(m) => (Some(m), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                CompareRow {
                    n_a: o.space.n_a(),
                    n_b: o.space.n_b(),
                    disease_interactions: o.space.n_a() > 1 && o.space.n_b() > 1,
                    converged: o.converged && metrics.is_some(),
                    max_rhat: o.max_rhat,
                    metrics,
                    error,
                }
            })
            .collect();
        let best = rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.metrics.as_ref().map(|m| (i, m.elpd_loo)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i);
        if let Some(b) = best {
            let reference = rows[b].metrics.as_ref().unwrap().pointwise_loo.clone();
            for r in rows.iter_mut() {
                if let Some(m) = r.metrics.as_mut() {
                    if m.pointwise_loo.len() == reference.len() {
                        let diff: Vec<f64> =
                            reference.iter().zip(&m.pointwise_loo).map(|(a, b)| a - b).collect();
                        m.elpd_diff = diff.iter().sum();
                        m.se_diff = pointwise_se(&diff);
                    } else {
                        m.elpd_diff = f64::NAN;
                        m.se_diff = f64::NAN;
                    }
                }
            }
        }
        Self { rows, best }
    }

    pub fn row(&self, n_a: usize, n_b: usize) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.n_a == n_a && r.n_b == n_b)
    }

    /// CSV with one row per variant. Metrics of failed fits are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "model",
            "n_a",
            "n_b",
            "disease_interactions",
            "elpd_loo",
            "se_elpd_loo",
            "p_loo",
            "elpd_waic",
            "p_waic",
            "waic",
            "elpd_diff",
            "se_diff",
            "k_le_0.5",
            "k_0.5_0.7",
            "k_0.7_1",
            "k_gt_1",
            "converged",
            "max_rhat",
            "error",
        ])?;
        for r in &self.rows {
            let mut rec = vec![
                r.label(),
                r.n_a.to_string(),
                r.n_b.to_string(),
                r.disease_interactions.to_string(),
            ];
            match &r.metrics {
                Some(m) => {
                    for v in [m.elpd_loo, m.se_elpd_loo, m.p_loo, m.elpd_waic, m.p_waic, m.waic, m.elpd_diff, m.se_diff] {
                        rec.push(v.to_string());
                    }
                    for c in [m.pareto_k.good, m.pareto_k.ok, m.pareto_k.bad, m.pareto_k.very_bad] {
                        rec.push(c.to_string());
                    }
                }
                None => rec.extend(std::iter::repeat_n(String::new(), 12)),
            }
            rec.push(r.converged.to_string());
            rec.push(r.max_rhat.map_or_else(String::new, |v| v.to_string()));
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Text table; metrics of non-converged variants are parenthesized and
    /// marked with a dagger.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<8}{:<14}{:>12}{:>10}{:>12}{:>10}{:>10}\n",
            "model", "interactions", "elpd", "SE", "WAIC", "p_loo", "k>0.7"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<8}{:<14}",
                r.label(),
                if r.disease_interactions { "yes" } else { "no" }
            ));
            match &r.metrics {
                Some(m) => {
                    let cell = |v: f64| {
                        if r.converged {
                            format!("{v:.2}")
                        } else {
                            format!("({v:.2})")
                        }
                    };
                    s.push_str(&format!(
                        "{:>12}{:>10}{:>12}{:>10}{:>10}",
                        cell(m.elpd_loo),
                        cell(m.se_elpd_loo),
                        cell(m.waic),
                        cell(m.p_loo),
                        m.pareto_k.bad + m.pareto_k.very_bad
                    ));
                    if !r.converged {
                        s.push_str(" \u{2020}");
                    }
                }
                None => s.push_str(&format!("  failed: {}", r.error.as_deref().unwrap_or("unknown"))),
            }
            s.push('\n');
        }
        if self.rows.iter().any(|r| !r.converged && r.metrics.is_some()) {
            s.push_str("\u{2020} not converged (some R-hat >= 1.1)\n");
        }
        s
    }
}

/// Rejects variants without latent dynamics in either disease.
pub fn check_variants(spaces: &[StateSpace]) -> Result<()> {
    if let Some(s) = spaces.iter().find(|s| s.n_global() == 1) {
        return Err(Error::Refused(format!(
            "variant ({},{}) has no latent dynamics to compare",
            s.n_a(),
            s.n_b()
        )));
    }
    if spaces.is_empty() {
        return Err(Error::validation("no variants requested"));
    }
    Ok(())
}

/// Fits every variant with the same data, priors and sampler budget and
/// scores each by patient-level PSIS-LOO and WAIC. A failing fit becomes a
/// row with an error instead of aborting the comparison.
pub fn fit_variants(
    data: &PanelDataset,
    config: &ChainConfig,
    spaces: &[StateSpace],
) -> Result<(CompareReport, Vec<Option<Fit>>)> {
    check_variants(spaces)?;
    config.validate()?;
    let fits: Vec<Result<Fit>> = spaces.par_iter().map(|&s| fit_model(data, s, config)).collect();
    let mut outcomes = Vec::with_capacity(fits.len());
    let mut kept = Vec::with_capacity(fits.len());
    for (space, fit) in spaces.iter().zip(fits) {
        match fit {
            Ok(f) => {
                outcomes.push(VariantOutcome {
                    space: *space,
                    converged: f.converged(),
                    max_rhat: Some(f.diagnostics.max_rhat()),
                    pointwise: pointwise_loglik(f.samples.draws(), data),
                });
                kept.push(Some(f));
            }
            Err(e) => {
                outcomes.push(VariantOutcome {
                    space: *space,
                    converged: false,
                    max_rhat: None,
                    pointwise: Err(e),
                });
                kept.push(None);
            }
        }
    }
    Ok((CompareReport::from_outcomes(outcomes), kept))
}
