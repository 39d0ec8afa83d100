//! Multinomial-logit transition mechanism over global states.

use crate::error::{Error, Result};

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("matrix rows must all have length n"));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.n + k]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.data[j * self.n + k] = v;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

/// Transition logits at covariate vector `x`: `eta[j][k] = alpha[j][k] + x . beta[j][k]`
/// off the diagonal and exactly 0 on it.
pub fn build_eta(alpha: &[Vec<f64>], beta: &[Vec<Vec<f64>>], x: &[f64]) -> Result<SquareMatrix> {
    let n = alpha.len();
    if alpha.iter().any(|r| r.len() != n) || beta.len() != n || beta.iter().any(|r| r.len() != n) {
        return Err(Error::validation("alpha/beta must be square over global states"));
    }
    let mut eta = SquareMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let b = &beta[j][k];
            if b.len() != x.len() {
                return Err(Error::validation(format!(
                    "covariate dimension {} does not match beta[{j}][{k}] length {}",
                    x.len(),
                    b.len()
                )));
            }
            eta.set(j, k, alpha[j][k] + dot(x, b));
        }
    }
    Ok(eta)
}

/// Plain softmax of one logit row with max-subtraction.
pub fn softmax_row(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Row-stochastic transition matrix from logits.
pub fn transition_matrix(eta: &SquareMatrix) -> Result<SquareMatrix> {
    check_finite(eta)?;
    let n = eta.dim();
    let mut gamma = SquareMatrix::zeros(n);
    for j in 0..n {
        gamma.row_mut(j).copy_from_slice(&softmax_row(eta.row(j)));
    }
    Ok(gamma)
}

/// Elementwise log of [`transition_matrix`], computed without
/// exponentiating back.
pub fn log_transition_matrix(eta: &SquareMatrix) -> Result<SquareMatrix> {
    check_finite(eta)?;
    let mut out = eta.clone();
    for j in 0..eta.dim() {
        log_softmax_in_place(out.row_mut(j));
    }
    Ok(out)
}

fn check_finite(eta: &SquareMatrix) -> Result<()> {
    for j in 0..eta.dim() {
        for k in 0..eta.dim() {
            if !eta.get(j, k).is_finite() {
                return Err(Error::numeric(format!(
                    "non-finite transition logit eta[{j}][{k}] = {}",
                    eta.get(j, k)
                )));
            }
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn log_softmax_in_place(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    for v in row.iter_mut() {
        *v -= lse;
    }
}

/// Log transition matrix written into `out` without validation. Used on
/// the hot path of the likelihood, where non-finite logits surface as a
/// non-finite log-likelihood instead.
pub(crate) fn log_gamma_into(alpha: &[Vec<f64>], beta: &[Vec<Vec<f64>>], x: &[f64], out: &mut [f64]) {
    let n = alpha.len();
    for j in 0..n {
        let row = &mut out[j * n..(j + 1) * n];
        for k in 0..n {
            row[k] = if j == k {
                0.0
            } else {
                alpha[j][k] + dot(x, &beta[j][k])
            };
        }
        log_softmax_in_place(row);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_params(n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
        (vec![vec![0.0; n]; n], vec![vec![vec![0.0; p]; n]; n])
    }

    #[test]
    fn zero_parameters_give_zero_logits_and_uniform_rows() {
        let (a, b) = zero_params(4, 3);
        let eta = build_eta(&a, &b, &[0.3, -1.0, 2.0]).unwrap();
        assert!(eta.to_rows().iter().flatten().all(|&v| v == 0.0));
        let g = transition_matrix(&eta).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                assert!((g.get(j, k) - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn coefficient_shifts_logit_by_its_value() {
        let (a, mut b) = zero_params(4, 1);
        b[3][1][0] = 3.29;
        let e0 = build_eta(&a, &b, &[0.0]).unwrap();
        let e1 = build_eta(&a, &b, &[1.0]).unwrap();
        let d = e1.get(3, 1) - e0.get(3, 1);
        assert!((d - 3.29).abs() < 1e-12);
        assert!((d.exp() - 26.84).abs() < 0.005);
    }

    #[test]
    fn diagonal_ignores_parameters() {
        let mut a = vec![vec![1.5; 4]; 4];
        let b = vec![vec![vec![2.0]; 4]; 4];
        for (j, row) in a.iter_mut().enumerate() {
            row[j] = 7.0;
        }
        let eta = build_eta(&a, &b, &[1.0]).unwrap();
        for j in 0..4 {
            assert_eq!(eta.get(j, j), 0.0);
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let row = [0.4, -1.2, 3.0, 0.0];
        let shifted: Vec<f64> = row.iter().map(|v| v + 17.5).collect();
        let a = softmax_row(&row);
        let b = softmax_row(&shifted);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ln3_logit_gives_one_half() {
        let eta = SquareMatrix::from_rows(&[
            vec![0.0, 3f64.ln(), 0.0, 0.0],
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.0; 4],
        ])
        .unwrap();
        let g = transition_matrix(&eta).unwrap();
        let expect = [1.0 / 6.0, 0.5, 1.0 / 6.0, 1.0 / 6.0];
        for k in 0..4 {
            assert!((g.get(0, k) - expect[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let eta = SquareMatrix::from_rows(&[
            vec![0.0, 800.0, -800.0],
            vec![-30.0, 0.0, 30.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let g = transition_matrix(&eta).unwrap();
        let lg = log_transition_matrix(&eta).unwrap();
        for j in 0..3 {
            let s: f64 = g.row(j).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(lg.row(j).iter().all(|v| !v.is_nan()));
        }
    }

    #[test]
    fn nonfinite_logit_names_indices() {
        let mut eta = SquareMatrix::zeros(2);
        eta.set(0, 1, f64::NAN);
        let err = transition_matrix(&eta).unwrap_err().to_string();
        assert!(err.contains("eta[0][1]"), "{err}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (a, b) = zero_params(4, 2);
        assert!(build_eta(&a, &b, &[1.0]).is_err());
    }
}
