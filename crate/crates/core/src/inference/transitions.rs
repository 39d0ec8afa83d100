use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::math::{mean, quantiles};
use crate::model::{build_eta, transition_matrix, Parameters};

/// Posterior of one transition probability at a fixed covariate profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSummary {
    /// 1-based global states.
    pub from: usize,
    pub to: usize,
    pub mean: f64,
    /// 5, 25, 50, 75 and 95% posterior quantiles.
    pub quantiles: [f64; 5],
}

/// Grand means of every covariate column.
pub fn covariate_means(data: &PanelDataset) -> Vec<f64> {
    let p = data.n_covariates();
    let mut sums = vec![0.0; p];
    let mut n = 0usize;
    for row in data.patients.iter().flat_map(|pt| pt.x.iter()) {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
        n += 1;
    }
    sums.into_iter().map(|s| s / n.max(1) as f64).collect()
}

/// Summaries of `gamma(j -> k)` at `profile` over all draws. `pairs` are
/// 1-based global states; `None` summarizes every pair.
pub fn conditional_transition_summary(
    draws: &[Parameters],
    profile: &[f64],
    pairs: Option<&[(usize, usize)]>,
) -> Result<Vec<TransitionSummary>> {
    let first = draws.first().ok_or_else(|| Error::validation("no posterior draws"))?;
    let g = first.pi.len();
    if profile.len() != first.n_covariates() {
        return Err(Error::validation(format!(
            "profile has {} entries, model has {} covariates",
            profile.len(),
            first.n_covariates()
        )));
    }
    let pairs: Vec<(usize, usize)> = match pairs {
        Some(ps) => {
            if let Some(&(j, k)) = ps.iter().find(|&&(j, k)| j == 0 || k == 0 || j > g || k > g) {
                return Err(Error::validation(format!(
                    "unknown transition {j}->{k}; global states are 1..={g}"
                )));
            }
            ps.to_vec()
        }
        None => (1..=g).flat_map(|j| (1..=g).map(move |k| (j, k))).collect(),
    };
    let matrices = draws
        .iter()
        .map(|d| transition_matrix(&build_eta(&d.alpha, &d.beta, profile)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs
        .into_iter()
        .map(|(j, k)| {
            let values: Vec<f64> = matrices.iter().map(|m| m.get(j - 1, k - 1)).collect();
            let q = quantiles(&values, &[0.05, 0.25, 0.5, 0.75, 0.95]);
            TransitionSummary {
                from: j,
                to: k,
                mean: mean(&values),
                quantiles: [q[0], q[1], q[2], q[3], q[4]],
            }
        })
        .collect())
}

/// CSV with header `from,to,mean,q05,q25,q50,q75,q95`.
pub fn write_transition_csv<W: Write>(writer: W, rows: &[TransitionSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["from", "to", "mean", "q05", "q25", "q50", "q75", "q95"])?;
    for r in rows {
        let mut rec = vec![r.from.to_string(), r.to.to_string(), r.mean.to_string()];
        rec.extend(r.quantiles.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateSpace;

    #[test]
    fn neutral_draws_are_uniform_with_no_width() {
        let draws = vec![Parameters::neutral(StateSpace::coupled(), 1); 5];
        let rows = conditional_transition_summary(&draws, &[0.3], None).unwrap();
        assert_eq!(rows.len(), 16);
        for r in rows {
            assert!((r.mean - 0.25).abs() < 1e-15);
            assert!((r.quantiles[4] - r.quantiles[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn unknown_pair_is_rejected() {
        let draws = vec![Parameters::neutral(StateSpace::coupled(), 0)];
        assert!(conditional_transition_summary(&draws, &[], Some(&[(1, 5)])).is_err());
    }
}
