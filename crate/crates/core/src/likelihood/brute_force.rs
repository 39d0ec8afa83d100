use crate::data::PatientSeries;
use crate::error::{Error, Result};
use crate::math::log_add_exp;
use crate::model::{build_eta, emission_logpdf, transition_matrix, Parameters};

/// Longest series [`brute_force_loglik`] will enumerate (4^8 paths for the
/// 2x2 model).
pub const BRUTE_FORCE_MAX_T: usize = 8;

/// Log-likelihood by explicit summation over every global-state path.
/// Reference implementation for testing the forward recursion.
pub fn brute_force_loglik(params: &Parameters, patient: &PatientSeries) -> Result<f64> {
    let space = params.validate()?;
    super::forward::check_patient(params, patient)?;
    let t_n = patient.len();
    if t_n > BRUTE_FORCE_MAX_T {
        return Err(Error::Refused(format!(
            "brute-force enumeration limited to T <= {BRUTE_FORCE_MAX_T}, got T = {t_n}"
        )));
    }
    let g_n = space.n_global();
    let gammas = (0..t_n.saturating_sub(1))
        .map(|t| transition_matrix(&build_eta(&params.alpha, &params.beta, &patient.x[t])?))
        .collect::<Result<Vec<_>>>()?;
    let emit = |t: usize, g: usize| {
        emission_logpdf(patient.y_a[t], space.state_a(g), &params.mu_a, params.sigma_a)
            + emission_logpdf(patient.y_b[t], space.state_b(g), &params.mu_b, params.sigma_b)
    };

    let n_paths = g_n.pow(t_n as u32);
    let mut total = f64::NEG_INFINITY;
    let mut path = vec![0usize; t_n];
    for code in 0..n_paths {
        let mut c = code;
        for slot in path.iter_mut().rev() {
            *slot = c % g_n;
            c /= g_n;
        }
        let mut lp = params.pi[path[0]].ln() + emit(0, path[0]);
        for t in 1..t_n {
            lp += gammas[t - 1].get(path[t - 1], path[t]).ln() + emit(t, path[t]);
        }
        total = log_add_exp(total, lp);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normal_logpdf, StateSpace};

    #[test]
    fn single_state_space_is_sum_of_emissions() {
        let mut p = Parameters::neutral(StateSpace::new(1, 1).unwrap(), 0);
        p.mu_a = vec![4.6];
        p.mu_b = vec![3.0];
        p.sigma_a = 0.1;
        p.sigma_b = 0.3;
        let pt = PatientSeries::new("a", vec![4.5, 4.7, 4.6], vec![2.9, 3.2, 3.0], vec![vec![]; 3]);
        let ll = brute_force_loglik(&p, &pt).unwrap();
        let direct: f64 = (0..3)
            .map(|t| normal_logpdf(pt.y_a[t], 4.6, 0.1) + normal_logpdf(pt.y_b[t], 3.0, 0.3))
            .sum();
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn refuses_long_series() {
        let p = Parameters::neutral(StateSpace::coupled(), 0);
        let pt = PatientSeries::new("a", vec![0.0; 9], vec![0.0; 9], vec![vec![]; 9]);
        assert!(matches!(brute_force_loglik(&p, &pt), Err(Error::Refused(_))));
    }
}
