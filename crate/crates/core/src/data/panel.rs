use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One patient's observation series.
///
/// `t` runs contiguously from 1; `x[t]` is the covariate row at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientSeries {
    pub id: String,
    pub t: Vec<u32>,
    pub y_a: Vec<f64>,
    pub y_b: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

impl PatientSeries {
    pub fn len(&self) -> usize {
        self.y_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_a.is_empty()
    }

    /// Series with contiguous time index `1..=T`.
    pub fn new(id: impl Into<String>, y_a: Vec<f64>, y_b: Vec<f64>, x: Vec<Vec<f64>>) -> Self {
        let t = (1..=y_a.len() as u32).collect();
        Self {
            id: id.into(),
            t,
            y_a,
            y_b,
            x,
        }
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    File(String),
    Simulation { seed: u64 },
    Derived(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelDataset {
    pub patients: Vec<PatientSeries>,
    pub covariate_names: Vec<String>,
    pub meta: Provenance,
}

/// How to read the measurement and covariate columns of a panel CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    /// Covariate columns to keep, in order. `None` keeps every column after
    /// the four fixed ones.
    #[serde(default)]
    pub covariates: Option<Vec<String>>,
    /// Natural-log transform the raw `y_a` column on load.
    #[serde(default)]
    pub log_y_a: bool,
    #[serde(default)]
    pub log_y_b: bool,
}

const FIXED_COLUMNS: [&str; 4] = ["patient_id", "t", "y_a", "y_b"];

impl PanelDataset {
    pub fn n_patients(&self) -> usize {
        self.patients.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.patients.iter().map(PatientSeries::len).sum()
    }

    pub fn covariate_index(&self, name: &str) -> Result<usize> {
        self.covariate_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::validation(format!("unknown covariate '{name}'")))
    }

    /// Same patients and covariate names, ignoring provenance.
    pub fn same_content(&self, other: &PanelDataset) -> bool {
        self.covariate_names == other.covariate_names && self.patients == other.patients
    }

    /// Keeps only the named covariates, in the given order.
    pub fn select_covariates(&self, names: &[String]) -> Result<PanelDataset> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.covariate_index(n))
            .collect::<Result<_>>()?;
        let patients = self
            .patients
            .iter()
            .map(|p| PatientSeries {
                x: p.x.iter().map(|row| idx.iter().map(|&i| row[i]).collect()).collect(),
                ..p.clone()
            })
            .collect();
        Ok(PanelDataset {
            patients,
            covariate_names: names.to_vec(),
            meta: self.meta.clone(),
        })
    }

    /// Checks the structural invariants: `T >= 2`, contiguous time from 1,
    /// finite observations and full covariate rows.
    pub fn validate(&self) -> Result<()> {
        let p = self.n_covariates();
        for patient in &self.patients {
            let n = patient.len();
            if n < 2 {
                return Err(Error::validation(format!(
                    "patient '{}' has {n} time step(s); at least 2 required",
                    patient.id
                )));
            }
            if patient.y_b.len() != n || patient.t.len() != n || patient.x.len() != n {
                return Err(Error::validation(format!(
                    "patient '{}' has ragged columns",
                    patient.id
                )));
            }
            for (i, &t) in patient.t.iter().enumerate() {
                if t as usize != i + 1 {
                    return Err(Error::validation(format!(
                        "patient '{}' has non-contiguous time index (expected {}, found {t})",
                        patient.id,
                        i + 1
                    )));
                }
            }
            for i in 0..n {
                if !patient.y_a[i].is_finite() || !patient.y_b[i].is_finite() {
                    return Err(Error::validation(format!(
                        "patient '{}' has a non-finite observation at t={}",
                        patient.id,
                        i + 1
                    )));
                }
                if patient.x[i].len() != p || patient.x[i].iter().any(|v| !v.is_finite()) {
                    return Err(Error::validation(format!(
                        "patient '{}' has an incomplete covariate row at t={}",
                        patient.id,
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reads a panel CSV (`patient_id,t,y_a,y_b,<covariates...>`).
pub fn load_panel(path: impl AsRef<Path>, schema: &CovariateSpec) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Load(format!("cannot open {}: {e}", path.display())))?;
    let mut data = read_panel(file, schema)?;
    data.meta = Provenance::File(path.display().to_string());
    Ok(data)
}

pub fn read_panel<R: Read>(reader: R, schema: &CovariateSpec) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    for (pos, name) in FIXED_COLUMNS.iter().enumerate() {
        if headers.get(pos).map(String::as_str) != Some(*name) {
            return Err(Error::Load(format!(
                "missing column '{name}' at position {}; header is {headers:?}",
                pos + 1
            )));
        }
    }
    let available = &headers[FIXED_COLUMNS.len()..];
    let names: Vec<String> = match &schema.covariates {
        Some(want) => want.clone(),
        None => available.to_vec(),
    };
    let col_idx: Vec<usize> = names
        .iter()
        .map(|n| {
            available
                .iter()
                .position(|h| h == n)
                .map(|i| i + FIXED_COLUMNS.len())
                .ok_or_else(|| Error::Load(format!("missing covariate column '{n}'")))
        })
        .collect::<Result<_>>()?;

    struct Row {
        t: u32,
        y_a: f64,
        y_b: f64,
        x: Vec<f64>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(usize, Row)>> = HashMap::new();

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let id = record.get(0).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::Load(format!("row {line}: empty patient_id")));
        }
        let num = |col: usize, what: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                Error::Load(format!("row {line} (patient '{id}'): cannot parse {what} '{raw}'"))
            })?;
            if !v.is_finite() {
                return Err(Error::Load(format!(
                    "row {line} (patient '{id}'): non-finite {what}"
                )));
            }
            Ok(v)
        };
        let t_raw = record.get(1).unwrap_or("");
        let t: u32 = t_raw.parse().map_err(|_| {
            Error::Load(format!("row {line} (patient '{id}'): bad time index '{t_raw}'"))
        })?;
        let mut y_a = num(2, "y_a")?;
        let mut y_b = num(3, "y_b")?;
        if schema.log_y_a {
            y_a = log_measurement(y_a, line, &id, "y_a")?;
        }
        if schema.log_y_b {
            y_b = log_measurement(y_b, line, &id, "y_b")?;
        }
        let x = col_idx
            .iter()
            .zip(&names)
            .map(|(&c, n)| num(c, n))
            .collect::<Result<Vec<_>>>()?;
        if !rows.contains_key(&id) {
            order.push(id.clone());
        }
        rows.entry(id).or_default().push((line, Row { t, y_a, y_b, x }));
    }

    let mut patients = Vec::with_capacity(order.len());
    for id in order {
        let mut pr = rows.remove(&id).unwrap_or_default();
        pr.sort_by_key(|(_, r)| r.t);
        for (pos, (line, r)) in pr.iter().enumerate() {
            if r.t as usize != pos + 1 {
                return Err(Error::Load(format!(
                    "patient '{id}': non-contiguous time index at row {line} (expected t={}, found t={})",
                    pos + 1,
                    r.t
                )));
            }
        }
        if pr.len() < 2 {
            return Err(Error::Load(format!(
                "patient '{id}' has {} time step(s); at least 2 required",
                pr.len()
            )));
        }
        let mut s = PatientSeries {
            id,
            t: Vec::with_capacity(pr.len()),
            y_a: Vec::with_capacity(pr.len()),
            y_b: Vec::with_capacity(pr.len()),
            x: Vec::with_capacity(pr.len()),
        };
        for (_, r) in pr {
            s.t.push(r.t);
            s.y_a.push(r.y_a);
            s.y_b.push(r.y_b);
            s.x.push(r.x);
        }
        patients.push(s);
    }

    let data = PanelDataset {
        patients,
        covariate_names: names,
        meta: Provenance::Derived("reader".into()),
    };
    data.validate()?;
    Ok(data)
}

fn log_measurement(v: f64, line: usize, id: &str, what: &str) -> Result<f64> {
    if v <= 0.0 {
        return Err(Error::Load(format!(
            "row {line} (patient '{id}'): {what} = {v} cannot be log-transformed"
        )));
    }
    Ok(v.ln())
}

pub fn write_panel(data: &PanelDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_panel_to(data, file)
}

/// Writes the panel CSV. Floats use Rust's shortest round-trip decimal
/// form, so reading the file back reproduces every value bit for bit.
pub fn write_panel_to<W: Write>(data: &PanelDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = FIXED_COLUMNS.to_vec();
    header.extend(data.covariate_names.iter().map(String::as_str));
    w.write_record(&header)?;
    for p in &data.patients {
        for i in 0..p.len() {
            let mut rec = vec![
                p.id.clone(),
                p.t[i].to_string(),
                p.y_a[i].to_string(),
                p.y_b[i].to_string(),
            ];
            rec.extend(p.x[i].iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "\
patient_id,t,y_a,y_b,bmi,metformin
p1,1,94.63,17.46,30.1,0
p1,2,95.0,18.0,30.2,1
p1,3,96.0,19.0,30.3,1
p1,4,97.0,20.0,30.4,0
p2,2,100.0,25.0,28.0,0
p2,1,101.0,26.0,28.0,0
p2,3,102.0,27.0,28.0,1
p2,4,103.0,28.0,28.0,1
p3,1,110.0,30.0,35.0,0
p3,2,111.0,31.0,35.0,0
p3,3,112.0,32.0,35.0,0
p3,4,113.0,33.0,35.0,0
";

    fn logged() -> CovariateSpec {
        CovariateSpec {
            covariates: None,
            log_y_a: true,
            log_y_b: true,
        }
    }

    #[test]
    fn toy_panel_counts() {
        let d = read_panel(TOY.as_bytes(), &logged()).unwrap();
        assert_eq!(d.n_patients(), 3);
        assert_eq!(d.n_rows(), 12);
        assert_eq!(d.covariate_names, vec!["bmi", "metformin"]);
        // rows are sorted by time within patient
        assert_eq!(d.patients[1].t, vec![1, 2, 3, 4]);
        assert!((d.patients[1].y_a[0] - 101f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_flag_transforms_measurements() {
        let d = read_panel(TOY.as_bytes(), &logged()).unwrap();
        assert!((d.patients[0].y_a[0] - 4.55).abs() < 1e-4);
        let raw = read_panel(TOY.as_bytes(), &CovariateSpec::default()).unwrap();
        assert_eq!(raw.patients[0].y_a[0], 94.63);
    }

    #[test]
    fn time_gap_names_patient() {
        let text = "patient_id,t,y_a,y_b\na,1,1,1\na,2,1,1\nb,1,1,1\nb,3,1,1\n";
        let err = read_panel(text.as_bytes(), &CovariateSpec::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("'b'") && err.contains("non-contiguous"), "{err}");
    }

    #[test]
    fn short_series_rejected() {
        let text = "patient_id,t,y_a,y_b\na,1,1,1\na,2,1,1\nb,1,1,1\n";
        let err = read_panel(text.as_bytes(), &CovariateSpec::default()).unwrap_err();
        assert!(err.to_string().contains("'b'"));
    }

    #[test]
    fn missing_column_and_nonfinite_values_rejected() {
        let text = "patient_id,t,y_a\na,1,1\na,2,1\n";
        assert!(read_panel(text.as_bytes(), &CovariateSpec::default()).is_err());
        let text = "patient_id,t,y_a,y_b\na,1,1,NaN\na,2,1,1\n";
        let err = read_panel(text.as_bytes(), &CovariateSpec::default()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        let spec = CovariateSpec {
            covariates: Some(vec!["age".into()]),
            ..Default::default()
        };
        let text = "patient_id,t,y_a,y_b,bmi\na,1,1,1,2\na,2,1,1,2\n";
        assert!(read_panel(text.as_bytes(), &spec).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = read_panel(TOY.as_bytes(), &logged()).unwrap();
        let mut buf = Vec::new();
        write_panel_to(&d, &mut buf).unwrap();
        let back = read_panel(buf.as_slice(), &CovariateSpec::default()).unwrap();
        assert!(back.same_content(&d));
    }
}
