use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::quantiles;
use crate::model::{build_eta, transition_matrix, Parameters};

/// Share of draws with a vanishing untreated path probability above which
/// those draws are dropped from the quotient quantiles.
pub const QUOTIENT_OVERFLOW_TOLERANCE: f64 = 0.01;

/// What to contrast and along which two-step path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverSpec {
    pub treatment: String,
    /// Lag-1 treatment column; defaults to `<treatment>_lag1` when present.
    #[serde(default)]
    pub treatment_lag: Option<String>,
    pub treated_value: f64,
    pub untreated_value: f64,
    /// Three 1-based global states `[a, b, c]` for the path `a -> b -> c`.
    pub path: [usize; 3],
}

impl SpilloverSpec {
    /// `(2,2) -> (1,2) -> (1,1)` in a 2x2 model.
    pub fn new(treatment: impl Into<String>, treated_value: f64, untreated_value: f64) -> Self {
        Self {
            treatment: treatment.into(),
            treatment_lag: None,
            treated_value,
            untreated_value,
            path: [4, 2, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverReport {
    pub path: [usize; 3],
    pub covariate_names: Vec<String>,
    pub profile: Vec<f64>,
    pub treatment: String,
    pub treatment_lag: Option<String>,
    pub n_draws: usize,
    /// 5, 25, 50, 75 and 95% quantiles over draws.
    pub xi_treated: [f64; 5],
    pub xi_untreated: [f64; 5],
    pub difference: [f64; 5],
    pub quotient: [f64; 5],
    /// Draws whose untreated path probability is zero at machine precision.
    pub n_quotient_overflow: usize,
    pub warning: Option<String>,
}

impl SpilloverReport {
    /// CSV with rows `xi_z`, `xi_z_prime`, `difference`, `quotient` and
    /// columns `q05,q25,q50,q75,q95`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["quantity", "q05", "q25", "q50", "q75", "q95"])?;
        for (label, row) in [
            ("xi_z", &self.xi_treated),
            ("xi_z_prime", &self.xi_untreated),
            ("difference", &self.difference),
            ("quotient", &self.quotient),
        ] {
            let mut rec = vec![label.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "path {} -> {} -> {}\n{:<12}{:>10}{:>10}{:>10}{:>10}{:>10}\n",
            self.path[0], self.path[1], self.path[2], "", "5%", "25%", "50%", "75%", "95%"
        );
        for (label, row) in [
            ("xi(z)", &self.xi_treated),
            ("xi(z')", &self.xi_untreated),
            ("difference", &self.difference),
            ("quotient", &self.quotient),
        ] {
            s.push_str(&format!("{label:<12}"));
            for v in row.iter() {
                s.push_str(&format!("{v:>10.4}"));
            }
            s.push('\n');
        }
        if let Some(w) = &self.warning {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }
}

const PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn five(values: &[f64]) -> [f64; 5] {
    let q = quantiles(values, &PROBS);
    [q[0], q[1], q[2], q[3], q[4]]
}

fn path_probability(params: &Parameters, path: [usize; 3], x_first: &[f64], x_second: &[f64]) -> Result<f64> {
    let g1 = transition_matrix(&build_eta(&params.alpha, &params.beta, x_first)?)?;
    let g2 = transition_matrix(&build_eta(&params.alpha, &params.beta, x_second)?)?;
    Ok(g1.get(path[0] - 1, path[1] - 1) * g2.get(path[1] - 1, path[2] - 1))
}

/// Probability of a two-step path under a persistent treatment value
/// versus a persistent untreated value, over posterior draws.
///
/// The first step uses the profile with the contemporaneous treatment set
/// to the value; the second step additionally sets the lagged treatment to
/// the same value. All other covariates stay at `profile`.
pub fn spillover(
    draws: &[Parameters],
    covariate_names: &[String],
    profile: &[f64],
    spec: &SpilloverSpec,
) -> Result<SpilloverReport> {
    let first = draws.first().ok_or_else(|| Error::validation("no posterior draws"))?;
    if profile.len() != covariate_names.len() || first.n_covariates() != profile.len() {
        return Err(Error::validation(format!(
            "profile has {} entries for {} named covariates and a model with {}",
            profile.len(),
            covariate_names.len(),
            first.n_covariates()
        )));
    }
    let g = first.pi.len();
    if spec.path.iter().any(|&s| s == 0 || s > g) {
        return Err(Error::validation(format!(
            "path {:?} leaves the global states 1..={g}",
            spec.path
        )));
    }
    let find = |name: &str| covariate_names.iter().position(|n| n == name);
    let treat = find(&spec.treatment).ok_or_else(|| {
        Error::validation(format!(
            "treatment covariate '{}' is not in the profile {:?}",
            spec.treatment, covariate_names
        ))
    })?;
    let lag_name = match &spec.treatment_lag {
        Some(n) => {
            find(n).ok_or_else(|| Error::validation(format!("lagged treatment '{n}' is not in the profile")))?;
            Some(n.clone())
        }
        None => {
            let default = format!("{}_lag1", spec.treatment);
            find(&default).map(|_| default)
        }
    };
    let lag = lag_name.as_deref().and_then(find);

    let scenario = |value: f64| {
        let mut x1 = profile.to_vec();
        x1[treat] = value;
        let mut x2 = x1.clone();
        if let Some(l) = lag {
            x2[l] = value;
        }
        (x1, x2)
    };
    let (t1, t2) = scenario(spec.treated_value);
    let (u1, u2) = scenario(spec.untreated_value);

    let mut xi_z = Vec::with_capacity(draws.len());
    let mut xi_zp = Vec::with_capacity(draws.len());
    for d in draws {
        xi_z.push(path_probability(d, spec.path, &t1, &t2)?);
        xi_zp.push(path_probability(d, spec.path, &u1, &u2)?);
    }
    let diff: Vec<f64> = xi_z.iter().zip(&xi_zp).map(|(a, b)| a - b).collect();

    let overflow = xi_zp.iter().filter(|&&b| b < f64::MIN_POSITIVE).count();
    let too_many = overflow as f64 > QUOTIENT_OVERFLOW_TOLERANCE * draws.len() as f64;
    let quotient: Vec<f64> = xi_z
        .iter()
        .zip(&xi_zp)
        .filter(|(_, &b)| !(too_many && b < f64::MIN_POSITIVE))
        .map(|(&a, &b)| {
            if b < f64::MIN_POSITIVE {
                f64::INFINITY
            } else {
                a / b
            }
        })
        .collect();
    let warning = too_many.then(|| {
        format!(
            "{overflow} of {} draws have a vanishing untreated path probability; they are excluded from the quotient",
            draws.len()
        )
    });
    let quotient = if quotient.is_empty() {
        [f64::INFINITY; 5]
    } else {
        five(&quotient)
    };

    Ok(SpilloverReport {
        path: spec.path,
        covariate_names: covariate_names.to_vec(),
        profile: profile.to_vec(),
        treatment: spec.treatment.clone(),
        treatment_lag: lag_name,
        n_draws: draws.len(),
        xi_treated: five(&xi_z),
        xi_untreated: five(&xi_zp),
        difference: five(&diff),
        quotient,
        n_quotient_overflow: overflow,
        warning,
    })
}

/// [`spillover`] once per covariate profile, e.g. one per patient.
pub fn spillover_by_profile(
    draws: &[Parameters],
    covariate_names: &[String],
    profiles: &[Vec<f64>],
    spec: &SpilloverSpec,
) -> Result<Vec<SpilloverReport>> {
    profiles
        .iter()
        .map(|p| spillover(draws, covariate_names, p, spec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateSpace;

    fn names() -> Vec<String> {
        vec!["age".into(), "metformin".into(), "metformin_lag1".into()]
    }

    #[test]
    fn zero_treatment_effect_gives_null_contrast() {
        let mut p = Parameters::neutral(StateSpace::coupled(), 3);
        p.alpha[3][1] = -1.0;
        p.beta[3][1][0] = 0.4;
        let r = spillover(&[p.clone(), p], &names(), &[0.2, 0.0, 0.0], &SpilloverSpec::new("metformin", 0.5, -0.5))
            .unwrap();
        assert!(r.difference.iter().all(|v| v.abs() < 1e-15));
        assert!(r.quotient.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(r.treatment_lag.as_deref(), Some("metformin_lag1"));
    }

    #[test]
    fn single_draw_collapses_quantiles() {
        let mut p = Parameters::neutral(StateSpace::coupled(), 3);
        p.beta[3][1][1] = 2.0;
        let r = spillover(&[p], &names(), &[0.0; 3], &SpilloverSpec::new("metformin", 0.5, 0.0)).unwrap();
        for row in [r.xi_treated, r.xi_untreated, r.difference, r.quotient] {
            assert!(row.iter().all(|v| *v == row[0]));
        }
        assert!(r.difference[0] > 0.0);
    }

    #[test]
    fn missing_treatment_is_a_validation_error() {
        let p = Parameters::neutral(StateSpace::coupled(), 3);
        let e = spillover(&[p], &names(), &[0.0; 3], &SpilloverSpec::new("insulin", 0.5, 0.0));
        assert!(matches!(e, Err(Error::Validation(_))));
    }

    #[test]
    fn reverse_path_uses_the_same_code() {
        let mut p = Parameters::neutral(StateSpace::coupled(), 3);
        p.beta[0][2][1] = 1.0;
        let mut spec = SpilloverSpec::new("metformin", 0.5, 0.0);
        spec.path = [1, 3, 4];
        let r = spillover(&[p], &names(), &[0.0; 3], &spec).unwrap();
        assert!(r.difference[2] > 0.0);
    }
}
