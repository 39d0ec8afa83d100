use std::io::Write;

use crate::data::{PanelDataset, PatientSeries};
use crate::error::{Error, Result};
use crate::model::{emission_logpdf, log_gamma_into, Parameters, StateSpace};

fn check_shapes(params: &Parameters, patient: &PatientSeries) -> Result<StateSpace> {
    let space = params.space()?;
    let g = space.n_global();
    if params.pi.len() != g || params.alpha.len() != g || params.beta.len() != g {
        return Err(Error::validation(format!(
            "parameters do not describe {g} global states"
        )));
    }
    let p = params.n_covariates();
    let t_n = patient.len();
    if t_n == 0 {
        return Err(Error::validation(format!("patient '{}' has no observations", patient.id)));
    }
    if patient.y_b.len() != t_n || patient.x.len() != t_n {
        return Err(Error::validation(format!("patient '{}' has ragged columns", patient.id)));
    }
    if let Some(t) = patient.x.iter().position(|r| r.len() != p) {
        return Err(Error::validation(format!(
            "patient '{}' covariate row at t={} has length {}, model expects {p}",
            patient.id,
            t + 1,
            patient.x[t].len()
        )));
    }
    Ok(space)
}

fn emission(params: &Parameters, space: StateSpace, patient: &PatientSeries, t: usize, g: usize) -> f64 {
    emission_logpdf(patient.y_a[t], space.state_a(g), &params.mu_a, params.sigma_a)
        + emission_logpdf(patient.y_b[t], space.state_b(g), &params.mu_b, params.sigma_b)
}

/// Most probable global-state path (0-based indices), computed in log
/// space. Ties go to the lower state index.
///
/// Only shapes are checked, so parameters that violate the ordering
/// constraint are accepted.
pub fn viterbi(params: &Parameters, patient: &PatientSeries) -> Result<Vec<usize>> {
    let space = check_shapes(params, patient)?;
    let g_n = space.n_global();
    let t_n = patient.len();

    let mut delta: Vec<f64> = (0..g_n)
        .map(|g| params.pi[g].ln() + emission(params, space, patient, 0, g))
        .collect();
    let mut back = vec![0usize; t_n * g_n];
    let mut log_gamma = vec![0.0; g_n * g_n];
    let mut next = vec![0.0; g_n];
    for t in 1..t_n {
        log_gamma_into(&params.alpha, &params.beta, &patient.x[t - 1], &mut log_gamma);
        for k in 0..g_n {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for j in 0..g_n {
                let v = delta[j] + log_gamma[j * g_n + k];
                if v > best {
                    best = v;
                    arg = j;
                }
            }
            back[t * g_n + k] = arg;
            next[k] = best + emission(params, space, patient, t, k);
        }
        std::mem::swap(&mut delta, &mut next);
    }

    let mut last = 0;
    for g in 1..g_n {
        if delta[g] > delta[last] {
            last = g;
        }
    }
    if !delta[last].is_finite() {
        return Err(Error::numeric(format!(
            "no path has finite probability for patient '{}'",
            patient.id
        )));
    }
    let mut path = vec![0; t_n];
    path[t_n - 1] = last;
    for t in (1..t_n).rev() {
        path[t - 1] = back[t * g_n + path[t]];
    }
    Ok(path)
}

/// Viterbi path of one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPath {
    pub patient_id: String,
    pub t: Vec<u32>,
    /// 0-based global states.
    pub states: Vec<usize>,
}

/// Decodes every patient of `data`.
pub fn decode_dataset(params: &Parameters, data: &PanelDataset) -> Result<Vec<DecodedPath>> {
    data.patients
        .iter()
        .map(|p| {
            Ok(DecodedPath {
                patient_id: p.id.clone(),
                t: p.t.clone(),
                states: viterbi(params, p)?,
            })
        })
        .collect()
}

/// CSV with header `patient_id,t,state_a,state_b,global`; states are
/// 1-based.
pub fn write_decoded_csv<W: Write>(writer: W, space: StateSpace, paths: &[DecodedPath]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["patient_id", "t", "state_a", "state_b", "global"])?;
    for path in paths {
        for (t, &g) in path.t.iter().zip(&path.states) {
            let (a, b) = space.split_global(g + 1)?;
            w.write_record([
                path.patient_id.clone(),
                t.to_string(),
                a.to_string(),
                b.to_string(),
                (g + 1).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Longest series [`brute_force_viterbi`] accepts.
pub const BRUTE_FORCE_VITERBI_MAX_T: usize = 8;

/// Most probable path by enumerating every path; among exact ties the
/// lexicographically smallest path wins. Reference for tests.
pub fn brute_force_viterbi(params: &Parameters, patient: &PatientSeries) -> Result<Vec<usize>> {
    let space = check_shapes(params, patient)?;
    let t_n = patient.len();
    if t_n > BRUTE_FORCE_VITERBI_MAX_T {
        return Err(Error::Refused(format!(
            "path enumeration limited to T <= {BRUTE_FORCE_VITERBI_MAX_T}, got T = {t_n}"
        )));
    }
    let g_n = space.n_global();
    let mut log_gammas = vec![vec![0.0; g_n * g_n]; t_n.saturating_sub(1)];
    for (t, lg) in log_gammas.iter_mut().enumerate() {
        log_gamma_into(&params.alpha, &params.beta, &patient.x[t], lg);
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_path = vec![0; t_n];
    let mut path = vec![0; t_n];
    for code in 0..g_n.pow(t_n as u32) {
        let mut c = code;
        for slot in path.iter_mut().rev() {
            *slot = c % g_n;
            c /= g_n;
        }
        let mut lp = params.pi[path[0]].ln() + emission(params, space, patient, 0, path[0]);
        for t in 1..t_n {
            lp += log_gammas[t - 1][path[t - 1] * g_n + path[t]] + emission(params, space, patient, t, path[t]);
        }
        if lp > best {
            best = lp;
            best_path.clone_from(&path);
        }
    }
    Ok(best_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_emissions_give_constant_path() {
        let space = StateSpace::coupled();
        let mut p = Parameters::neutral(space, 0);
        p.mu_a = vec![4.55, 4.70];
        p.mu_b = vec![2.86, 3.43];
        p.sigma_a = 1e-6;
        p.sigma_b = 1e-6;
        p.pi = vec![0.0, 0.0, 1.0, 0.0];
        // global state 3 = (2, 1)
        let pt = PatientSeries::new("a", vec![4.70; 5], vec![2.86; 5], vec![vec![]; 5]);
        assert_eq!(viterbi(&p, &pt).unwrap(), vec![2; 5]);
    }

    #[test]
    fn symmetric_model_ties_to_lowest_index() {
        let space = StateSpace::coupled();
        let mut p = Parameters::neutral(space, 0);
        p.mu_a = vec![1.0, 1.0];
        p.mu_b = vec![1.0, 1.0];
        let pt = PatientSeries::new("a", vec![0.3, 2.0, 1.0], vec![1.5, 0.1, 1.0], vec![vec![]; 3]);
        assert_eq!(viterbi(&p, &pt).unwrap(), vec![0; 3]);
        assert_eq!(brute_force_viterbi(&p, &pt).unwrap(), vec![0; 3]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = Parameters::neutral(StateSpace::coupled(), 1);
        let pt = PatientSeries::new("a", vec![1.0; 2], vec![1.0; 2], vec![vec![]; 2]);
        assert!(matches!(viterbi(&p, &pt), Err(Error::Validation(_))));
    }
}
