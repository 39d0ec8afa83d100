use std::io::Write;

use rayon::prelude::*;

use super::forward_loglik_patient;
use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::model::Parameters;

/// `values[d][i]` is the log-likelihood of patient `i`'s whole series under
/// the parameters of draw `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseLogLik {
    pub patient_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl PointwiseLogLik {
    pub fn new(patient_ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = patient_ids.len();
        if values.iter().any(|r| r.len() != n) {
            return Err(Error::validation("pointwise rows must have one entry per patient"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::numeric("pointwise log-likelihood contains non-finite entries"));
        }
        Ok(Self { patient_ids, values })
    }

    pub fn n_draws(&self) -> usize {
        self.values.len()
    }

    pub fn n_patients(&self) -> usize {
        self.patient_ids.len()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[i]).collect()
    }

    /// CSV with header `draw,patient_id,loglik` (draws numbered from 1).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["draw", "patient_id", "loglik"])?;
        for (d, row) in self.values.iter().enumerate() {
            for (id, v) in self.patient_ids.iter().zip(row) {
                w.write_record([(d + 1).to_string(), id.clone(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Patient-level log-likelihood for every draw. Rows follow the order of
/// `draws`, columns the order of `data.patients`.
pub fn pointwise_loglik(draws: &[Parameters], data: &PanelDataset) -> Result<PointwiseLogLik> {
    let values = draws
        .par_iter()
        .map(|params| {
            data.patients
                .iter()
                .map(|p| forward_loglik_patient(params, p))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    PointwiseLogLik::new(data.patients.iter().map(|p| p.id.clone()).collect(), values)
}
