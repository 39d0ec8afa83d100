//! Thin-QR reparameterization of the covariate design.
//!
//! With `X = Q R` the thin QR of the centered `n x p` design, the sampler
//! works with `Q* = Q sqrt(n - 1)` and `R* = R / sqrt(n - 1)`. A
//! coefficient vector `beta_tilde` on `Q*` corresponds to
//! `beta = R*^-1 beta_tilde` on `X`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::model::Parameters;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QrBasis {
    /// `n x p`, row-major.
    pub q_star: Vec<Vec<f64>>,
    /// `p x p` upper triangular.
    pub r_star: Vec<Vec<f64>>,
    pub r_star_inverse: Vec<Vec<f64>>,
}

const RANK_TOL: f64 = 1e-9;

/// Thin QR of a centered design matrix given as rows.
pub fn qr_reparam(x: &[Vec<f64>]) -> Result<QrBasis> {
    qr_reparam_named(x, &[])
}

/// As [`qr_reparam`], using `names` in rank-deficiency errors.
pub fn qr_reparam_named(x: &[Vec<f64>], names: &[String]) -> Result<QrBasis> {
    let n = x.len();
    let p = x.first().map_or(0, Vec::len);
    if p == 0 {
        return Ok(QrBasis {
            q_star: vec![Vec::new(); n],
            r_star: Vec::new(),
            r_star_inverse: Vec::new(),
        });
    }
    if x.iter().any(|r| r.len() != p) {
        return Err(Error::validation("design rows have unequal length"));
    }
    if n < p + 1 {
        return Err(Error::validation(format!(
            "design has {n} rows but {p} columns; full column rank impossible"
        )));
    }
    let name = |c: usize| names.get(c).cloned().unwrap_or_else(|| format!("column {}", c + 1));

    let m = DMatrix::from_fn(n, p, |i, j| x[i][j]);
    let qr = m.qr();
    let mut q = qr.q();
    let mut r = qr.r();

    // positive diagonal, so an already-orthonormal design maps to R* = I
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            for c in 0..p {
                r[(j, c)] = -r[(j, c)];
            }
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }

    let scale = r.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for j in 0..p {
        let col_norm = (0..=j).map(|i| r[(i, j)].powi(2)).sum::<f64>().sqrt();
        if r[(j, j)].abs() <= RANK_TOL * scale.max(col_norm) {
            let partners = collinear_partners(&r, j);
            let mut cols: Vec<String> = partners.into_iter().map(name).collect();
            cols.push(name(j));
            return Err(Error::validation(format!(
                "covariate design is rank deficient: {} are collinear",
                cols.join(", ")
            )));
        }
    }

    let s = ((n - 1) as f64).sqrt();
    let q_star: Vec<Vec<f64>> = (0..n).map(|i| (0..p).map(|j| q[(i, j)] * s).collect()).collect();
    let r_star_m = &r / s;
    let inv = r_star_m
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::numeric("R* is singular"))?;
    Ok(QrBasis {
        q_star,
        r_star: rows_of(&r_star_m),
        r_star_inverse: rows_of(&inv),
    })
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Earlier columns that column `j` is (numerically) a combination of.
fn collinear_partners(r: &DMatrix<f64>, j: usize) -> Vec<usize> {
    if j == 0 {
        return Vec::new();
    }
    let head = r.view((0, 0), (j, j)).into_owned();
    let rhs = r.view((0, j), (j, 1)).into_owned();
    match head.solve_upper_triangular(&rhs) {
        Some(c) => {
            let big = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            (0..j).filter(|&i| c[i].abs() > 1e-6 * big.max(1e-300)).collect()
        }
        None => (0..j).collect(),
    }
}

impl QrBasis {
    pub fn n_covariates(&self) -> usize {
        self.r_star.len()
    }

    /// `beta = R*^-1 beta_tilde`.
    pub fn beta_from_tilde(&self, beta_tilde: &[f64]) -> Vec<f64> {
        mat_vec(&self.r_star_inverse, beta_tilde)
    }

    /// `beta_tilde = R* beta`.
    pub fn tilde_from_beta(&self, beta: &[f64]) -> Vec<f64> {
        mat_vec(&self.r_star, beta)
    }

    /// Row of the rotated design for a centered covariate row:
    /// `q = x R*^-1`.
    pub fn rotate_row(&self, x_centered: &[f64]) -> Vec<f64> {
        let p = self.n_covariates();
        (0..p)
            .map(|j| (0..p).map(|i| x_centered[i] * self.r_star_inverse[i][j]).sum())
            .collect()
    }
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Covariate preprocessing for a fit: grand-mean centering followed by
/// the thin-QR rotation.
///
/// Sampler-space parameters (intercepts at the covariate means,
/// coefficients on the rotated design) convert to and from reported
/// parameters, which act on the raw covariates exactly as the generative
/// model does.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariateDesign {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub qr: QrBasis,
}

impl CovariateDesign {
    pub fn from_data(data: &PanelDataset) -> Result<Self> {
        let p = data.n_covariates();
        let rows: Vec<&Vec<f64>> = data.patients.iter().flat_map(|pt| pt.x.iter()).collect();
        let n = rows.len();
        if n == 0 {
            return Err(Error::validation("dataset has no rows"));
        }
        let mut means = vec![0.0; p];
        for r in &rows {
            for (m, v) in means.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let centered: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&means).map(|(v, m)| v - m).collect())
            .collect();
        let qr = qr_reparam_named(&centered, &data.covariate_names)?;
        Ok(Self {
            names: data.covariate_names.clone(),
            means,
            qr,
        })
    }

    pub fn n_covariates(&self) -> usize {
        self.means.len()
    }

    pub fn rotate_row(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.means).map(|(v, m)| v - m).collect();
        self.qr.rotate_row(&centered)
    }

    /// Dataset with every covariate row replaced by its rotated version.
    pub fn rotate_dataset(&self, data: &PanelDataset) -> Result<PanelDataset> {
        if data.covariate_names != self.names {
            return Err(Error::validation(format!(
                "dataset covariates {:?} do not match design {:?}",
                data.covariate_names, self.names
            )));
        }
        let mut out = data.clone();
        for p in &mut out.patients {
            for row in &mut p.x {
                *row = self.rotate_row(row);
            }
        }
        out.covariate_names = (1..=self.n_covariates()).map(|i| format!("q{i}")).collect();
        Ok(out)
    }

    /// Sampler-space parameters to reported parameters:
    /// `beta = R*^-1 beta_tilde`, `alpha = alpha_c - means . beta`.
    pub fn to_reported(&self, sampler: &Parameters) -> Parameters {
        let mut out = sampler.clone();
        let g = out.pi.len();
        for j in 0..g {
            for k in 0..g {
                if j == k {
                    continue;
                }
                let beta = self.qr.beta_from_tilde(&sampler.beta[j][k]);
                out.alpha[j][k] = sampler.alpha[j][k] - dot(&self.means, &beta);
                out.beta[j][k] = beta;
            }
        }
        out
    }

    /// Inverse of [`to_reported`](Self::to_reported).
    pub fn to_sampler(&self, reported: &Parameters) -> Parameters {
        let mut out = reported.clone();
        let g = out.pi.len();
        for j in 0..g {
            for k in 0..g {
                if j == k {
                    continue;
                }
                let beta = &reported.beta[j][k];
                out.alpha[j][k] = reported.alpha[j][k] + dot(&self.means, beta);
                out.beta[j][k] = self.qr.tilde_from_beta(beta);
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_centered(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        for j in 0..p {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            for r in &mut x {
                r[j] -= m;
            }
        }
        // make column 2 correlated with column 1
        if p > 1 {
            for r in &mut x {
                r[1] += 0.8 * r[0];
            }
        }
        x
    }

    #[test]
    fn reproduces_design() {
        let x = random_centered(50, 3, 1);
        let b = qr_reparam(&x).unwrap();
        for i in 0..50 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| b.q_star[i][k] * b.r_star[k][j]).sum();
                assert!((v - x[i][j]).abs() < 1e-10);
            }
        }
        // R* R*^-1 = I
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| b.r_star[i][k] * b.r_star_inverse[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthogonal_unit_variance_gives_identity() {
        // columns: +-1 patterns, orthogonal, mean zero, sum of squares n
        let n = 8;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = if i % 2 == 0 { 1.0 } else { -1.0 };
                let b = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
                vec![a, b]
            })
            .collect();
        // scale to unit sample variance: sum x^2 = n - 1
        let s = ((n - 1) as f64 / n as f64).sqrt();
        let x: Vec<Vec<f64>> = x.into_iter().map(|r| r.into_iter().map(|v| v * s).collect()).collect();
        let b = qr_reparam(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((b.r_star[i][j] - e).abs() < 1e-10);
            }
        }
        let bt = [0.3, -1.2];
        let beta = b.beta_from_tilde(&bt);
        assert!((beta[0] - 0.3).abs() < 1e-10 && (beta[1] + 1.2).abs() < 1e-10);
    }

    #[test]
    fn linear_predictor_equivalence() {
        let x = random_centered(40, 3, 2);
        let b = qr_reparam(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let bt: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let beta = b.beta_from_tilde(&bt);
            for i in 0..40 {
                let lhs: f64 = (0..3).map(|k| b.q_star[i][k] * bt[k]).sum();
                let rhs: f64 = (0..3).map(|k| x[i][k] * beta[k]).sum();
                assert!((lhs - rhs).abs() < 1e-10);
                let q = b.rotate_row(&x[i]);
                for k in 0..3 {
                    assert!((q[k] - b.q_star[i][k]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn duplicated_column_names_culprits() {
        let mut x = random_centered(30, 2, 3);
        for r in &mut x {
            let v = r[0];
            r.push(v);
        }
        let names: Vec<String> = ["age", "bmi", "age_copy"].iter().map(|s| s.to_string()).collect();
        let err = qr_reparam_named(&x, &names).unwrap_err().to_string();
        assert!(err.contains("rank deficient"), "{err}");
        assert!(err.contains("age") && err.contains("age_copy"), "{err}");
        assert!(!err.contains("bmi"), "{err}");
    }

    #[test]
    fn design_round_trip_between_spaces() {
        use crate::data::{PatientSeries, Provenance};
        use crate::model::StateSpace;
        let x = random_centered(30, 2, 5);
        let rows: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0] + 3.0, r[1] - 1.0]).collect();
        let data = PanelDataset {
            patients: rows
                .chunks(5)
                .enumerate()
                .map(|(i, c)| PatientSeries::new(format!("p{i}"), vec![0.0; 5], vec![0.0; 5], c.to_vec()))
                .collect(),
            covariate_names: vec!["a".into(), "b".into()],
            meta: Provenance::Derived("t".into()),
        };
        let design = CovariateDesign::from_data(&data).unwrap();
        let mut p = Parameters::neutral(StateSpace::coupled(), 2);
        p.alpha[0][1] = 0.7;
        p.beta[0][1] = vec![1.0, -2.0];
        p.beta[3][2] = vec![0.5, 0.25];
        let s = design.to_sampler(&p);
        let back = design.to_reported(&s);
        for j in 0..4 {
            for k in 0..4 {
                assert!((back.alpha[j][k] - p.alpha[j][k]).abs() < 1e-10);
                for c in 0..2 {
                    assert!((back.beta[j][k][c] - p.beta[j][k][c]).abs() < 1e-10);
                }
            }
        }
        // identical logits on raw rows vs rotated rows
        let rotated = design.rotate_dataset(&data).unwrap();
        for (raw, rot) in data.patients.iter().zip(&rotated.patients) {
            for (xr, xq) in raw.x.iter().zip(&rot.x) {
                let eta_raw = p.alpha[0][1] + dot(xr, &p.beta[0][1]);
                let eta_rot = s.alpha[0][1] + dot(xq, &s.beta[0][1]);
                assert!((eta_raw - eta_rot).abs() < 1e-10);
            }
        }
    }
}
