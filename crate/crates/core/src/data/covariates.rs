//! Covariate engineering: within-patient centering and lagging.

use super::{PanelDataset, Provenance};
use crate::error::{Error, Result};

/// Appends `<var>_centered`: each patient's values minus that patient's
/// own mean. The original column is kept.
pub fn center_within(data: &PanelDataset, var: &str) -> Result<PanelDataset> {
    let name = format!("{var}_centered");
    derive_column(data, var, name, |values| {
        let m = values.iter().sum::<f64>() / values.len() as f64;
        values.iter().map(|v| v - m).collect()
    })
}

/// Appends `<var>_lag<lag>`: the value `lag` steps earlier, with 0 before
/// the lag horizon.
pub fn lag_covariate(data: &PanelDataset, var: &str, lag: usize) -> Result<PanelDataset> {
    if lag == 0 {
        return Err(Error::validation("lag must be >= 1"));
    }
    let name = format!("{var}_lag{lag}");
    derive_column(data, var, name, |values| {
        (0..values.len())
            .map(|t| if t >= lag { values[t - lag] } else { 0.0 })
            .collect()
    })
}

fn derive_column<F>(data: &PanelDataset, var: &str, name: String, f: F) -> Result<PanelDataset>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let col = data.covariate_index(var)?;
    if data.covariate_names.contains(&name) {
        return Err(Error::validation(format!("covariate '{name}' already exists")));
    }
    let mut out = data.clone();
    for p in &mut out.patients {
        let values: Vec<f64> = p.x.iter().map(|row| row[col]).collect();
        for (row, v) in p.x.iter_mut().zip(f(&values)) {
            row.push(v);
        }
    }
    out.covariate_names.push(name.clone());
    out.meta = Provenance::Derived(format!("{:?} + {name}", data.meta));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PatientSeries;

    fn one_patient(values: &[f64]) -> PanelDataset {
        let n = values.len();
        PanelDataset {
            patients: vec![PatientSeries::new(
                "p",
                vec![0.0; n],
                vec![0.0; n],
                values.iter().map(|&v| vec![v]).collect(),
            )],
            covariate_names: vec!["z".into()],
            meta: Provenance::Derived("test".into()),
        }
    }

    fn column(d: &PanelDataset, name: &str) -> Vec<f64> {
        let c = d.covariate_index(name).unwrap();
        d.patients[0].x.iter().map(|r| r[c]).collect()
    }

    #[test]
    fn centering_subtracts_patient_mean() {
        let d = center_within(&one_patient(&[0.0, 1.0, 1.0]), "z").unwrap();
        let c = column(&d, "z_centered");
        let expect = [-2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(column(&d, "z"), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn centering_constant_zero_gives_zero() {
        let d = center_within(&one_patient(&[0.0; 5]), "z").unwrap();
        assert!(column(&d, "z_centered").iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lag_shifts_and_fills_with_zero() {
        let d = lag_covariate(&one_patient(&[1.0, 2.0, 3.0]), "z", 1).unwrap();
        assert_eq!(column(&d, "z_lag1"), vec![0.0, 1.0, 2.0]);
        let d = lag_covariate(&one_patient(&[1.0, 2.0, 3.0]), "z", 3).unwrap();
        assert_eq!(column(&d, "z_lag3"), vec![0.0; 3]);
        assert!(lag_covariate(&one_patient(&[1.0]), "z", 0).is_err());
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(center_within(&one_patient(&[1.0, 2.0]), "nope").is_err());
        assert!(lag_covariate(&one_patient(&[1.0, 2.0]), "nope", 1).is_err());
    }

    // Fixture: for (0, 1, 1), center-then-lag gives (0, -2/3, 1/3) while
    // lag-then-center gives (-1/3, -1/3, 2/3). The pipeline uses the first.
    #[test]
    fn center_then_lag_differs_from_lag_then_center() {
        let base = one_patient(&[0.0, 1.0, 1.0]);
        let cl = lag_covariate(&center_within(&base, "z").unwrap(), "z_centered", 1).unwrap();
        let a = column(&cl, "z_centered_lag1");
        let lc = center_within(&lag_covariate(&base, "z", 1).unwrap(), "z_lag1").unwrap();
        let b = column(&lc, "z_lag1_centered");
        let ea = [0.0, -2.0 / 3.0, 1.0 / 3.0];
        let eb = [-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
        for i in 0..3 {
            assert!((a[i] - ea[i]).abs() < 1e-15);
            assert!((b[i] - eb[i]).abs() < 1e-15);
        }
        assert_ne!(a, b);
    }

    #[test]
    fn centered_columns_have_zero_patient_mean() {
        let mut d = one_patient(&[0.3, 1.7, -2.2, 5.0, 0.0]);
        d.patients.push(PatientSeries::new(
            "q",
            vec![0.0; 3],
            vec![0.0; 3],
            vec![vec![1.0], vec![1.0], vec![0.0]],
        ));
        let c = center_within(&d, "z").unwrap();
        let col = c.covariate_index("z_centered").unwrap();
        for p in &c.patients {
            let m: f64 = p.x.iter().map(|r| r[col]).sum::<f64>() / p.len() as f64;
            assert!(m.abs() < 1e-12);
        }
    }
}
