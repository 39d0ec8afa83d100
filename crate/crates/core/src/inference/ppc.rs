use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::viterbi;
use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::math::quantile_sorted;
use crate::model::Parameters;
use crate::sampler::stream_rng;

/// Streams for replicate generation live above every sampler and init
/// stream.
const PPC_STREAM_OFFSET: u64 = 1 << 40;

/// Replicated measurements. `y_a[r][i]` is replicate `r` of the `i`-th
/// observation, observations ordered by patient then time.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateBundle {
    pub draw_index: Vec<usize>,
    pub y_a: Vec<Vec<f64>>,
    pub y_b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub central_50: f64,
    pub central_90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub n_observations: usize,
    pub n_replicates: usize,
    pub disease_a: Coverage,
    pub disease_b: Coverage,
    /// Both diseases pooled.
    pub overall: Coverage,
}

/// Per-observation replicate quantiles next to the observed value.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationInterval {
    pub patient_id: String,
    pub t: u32,
    pub disease: char,
    pub observed: f64,
    /// 5, 25, 50, 75 and 95% quantiles of the replicates.
    pub quantiles: [f64; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorPredictive {
    pub replicates: ReplicateBundle,
    pub intervals: Vec<ObservationInterval>,
    pub coverage: CoverageSummary,
}

impl PosteriorPredictive {
    /// CSV with header `patient_id,t,disease,observed,q05,q25,q50,q75,q95`.
    pub fn write_intervals_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["patient_id", "t", "disease", "observed", "q05", "q25", "q50", "q75", "q95"])?;
        for iv in &self.intervals {
            let mut rec = vec![
                iv.patient_id.clone(),
                iv.t.to_string(),
                iv.disease.to_string(),
                iv.observed.to_string(),
            ];
            rec.extend(iv.quantiles.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

const PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Posterior predictive replicates conditioned on decoded states.
///
/// Each replicate picks a posterior draw uniformly at random, decodes
/// every patient's most probable path under it and emits fresh
/// measurements from the state-specific normals. Coverage is the share of
/// observed values inside the central 50% and 90% replicate intervals.
pub fn posterior_predictive(
    draws: &[Parameters],
    data: &PanelDataset,
    n_rep: usize,
    seed: u64,
) -> Result<PosteriorPredictive> {
    if draws.is_empty() {
        return Err(Error::validation("no posterior draws"));
    }
    if n_rep < 2 {
        return Err(Error::validation("posterior predictive needs at least 2 replicates"));
    }
    let n_obs = data.n_rows();
    let reps = (0..n_rep)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, PPC_STREAM_OFFSET + r as u64);
            let d = rng.random_range(0..draws.len());
            let params = &draws[d];
            let space = params.validate()?;
            let na = Normal::new(0.0, params.sigma_a).map_err(|e| Error::numeric(e.to_string()))?;
            let nb = Normal::new(0.0, params.sigma_b).map_err(|e| Error::numeric(e.to_string()))?;
            let mut ya = Vec::with_capacity(n_obs);
            let mut yb = Vec::with_capacity(n_obs);
            for p in &data.patients {
                for g in viterbi(params, p)? {
                    ya.push(params.mu_a[space.state_a(g)] + na.sample(&mut rng));
                    yb.push(params.mu_b[space.state_b(g)] + nb.sample(&mut rng));
                }
            }
            Ok((d, ya, yb))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut replicates = ReplicateBundle {
        draw_index: Vec::with_capacity(n_rep),
        y_a: Vec::with_capacity(n_rep),
        y_b: Vec::with_capacity(n_rep),
    };
    for (d, ya, yb) in reps {
        replicates.draw_index.push(d);
        replicates.y_a.push(ya);
        replicates.y_b.push(yb);
    }

    let mut intervals = Vec::with_capacity(2 * n_obs);
    let mut hits = [[0usize; 2]; 2];
    let mut i = 0;
    let mut column = vec![0.0; n_rep];
    for p in &data.patients {
        for (t_idx, &t) in p.t.iter().enumerate() {
            for (which, (disease, observed, reps)) in [
                ('A', p.y_a[t_idx], &replicates.y_a),
                ('B', p.y_b[t_idx], &replicates.y_b),
            ]
            .into_iter()
            .enumerate()
            {
                for (c, r) in column.iter_mut().zip(reps.iter()) {
                    *c = r[i];
                }
                column.sort_by(f64::total_cmp);
                let q = PROBS.map(|pr| quantile_sorted(&column, pr));
                hits[which][0] += usize::from(q[1] <= observed && observed <= q[3]);
                hits[which][1] += usize::from(q[0] <= observed && observed <= q[4]);
                intervals.push(ObservationInterval {
                    patient_id: p.id.clone(),
                    t,
                    disease,
                    observed,
                    quantiles: q,
                });
            }
            i += 1;
        }
    }
    let share = |h: usize, n: usize| h as f64 / n as f64;
    let coverage = CoverageSummary {
        n_observations: n_obs,
        n_replicates: n_rep,
        disease_a: Coverage {
            central_50: share(hits[0][0], n_obs),
            central_90: share(hits[0][1], n_obs),
        },
        disease_b: Coverage {
            central_50: share(hits[1][0], n_obs),
            central_90: share(hits[1][1], n_obs),
        },
        overall: Coverage {
            central_50: share(hits[0][0] + hits[1][0], 2 * n_obs),
            central_90: share(hits[0][1] + hits[1][1], 2 * n_obs),
        },
    };
    Ok(PosteriorPredictive {
        replicates,
        intervals,
        coverage,
    })
}
