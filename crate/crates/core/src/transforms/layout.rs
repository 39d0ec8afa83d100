use serde::{Deserialize, Serialize};

use crate::model::StateSpace;

/// Fixed layout of the unconstrained parameter vector.
///
/// ```text
/// [ mu_a[1], log-gaps of mu_a (n_a - 1),
///   mu_b[1], log-gaps of mu_b (n_b - 1),
///   log sigma_a, log sigma_b,
///   stick-breaking coordinates of pi (G - 1),
///   alpha off-diagonals, row-major (G (G - 1)),
///   beta-tilde off-diagonals, row-major, covariates innermost (G (G - 1) p) ]
/// ```
///
/// For the 2x2 model the dimension is `2 + 2 + 2 + 3 + 12 + 12 p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub space: StateSpace,
    pub n_covariates: usize,
}

impl ParamLayout {
    pub fn new(space: StateSpace, n_covariates: usize) -> Self {
        Self { space, n_covariates }
    }

    pub fn n_global(&self) -> usize {
        self.space.n_global()
    }

    pub fn n_offdiag(&self) -> usize {
        let g = self.n_global();
        g * (g - 1)
    }

    pub fn mu_a(&self) -> usize {
        0
    }

    pub fn mu_b(&self) -> usize {
        self.space.n_a()
    }

    pub fn log_sigma_a(&self) -> usize {
        self.space.n_a() + self.space.n_b()
    }

    pub fn log_sigma_b(&self) -> usize {
        self.log_sigma_a() + 1
    }

    pub fn pi(&self) -> usize {
        self.log_sigma_b() + 1
    }

    pub fn alpha(&self) -> usize {
        self.pi() + self.n_global() - 1
    }

    pub fn beta(&self) -> usize {
        self.alpha() + self.n_offdiag()
    }

    pub fn dim(&self) -> usize {
        self.beta() + self.n_offdiag() * self.n_covariates
    }

    /// Off-diagonal `(j, k)` pairs (0-based) in storage order.
    pub fn offdiag_pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let g = self.n_global();
        (0..g).flat_map(move |j| (0..g).filter(move |&k| k != j).map(move |k| (j, k)))
    }

    /// Names of the unconstrained coordinates.
    pub fn unconstrained_names(&self, covariates: &[String]) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        names.push("mu_a[1]".to_string());
        names.extend((2..=self.space.n_a()).map(|s| format!("log_gap_a[{s}]")));
        names.push("mu_b[1]".to_string());
        names.extend((2..=self.space.n_b()).map(|s| format!("log_gap_b[{s}]")));
        names.push("log_sigma_a".into());
        names.push("log_sigma_b".into());
        names.extend((1..self.n_global()).map(|k| format!("pi_stick[{k}]")));
        names.extend(self.offdiag_pairs().map(|(j, k)| format!("alpha[{},{}]", j + 1, k + 1)));
        for (j, k) in self.offdiag_pairs() {
            for c in 0..self.n_covariates {
                names.push(format!("beta_tilde[{},{}][{}]", j + 1, k + 1, cov_name(covariates, c)));
            }
        }
        names
    }

    /// Names of the reported (constrained) quantities, in the order
    /// produced by [`flatten_reported`](crate::transforms::flatten_reported).
    pub fn reported_names(&self, covariates: &[String]) -> Vec<String> {
        let mut names = Vec::new();
        names.extend((1..=self.space.n_a()).map(|s| format!("mu_a[{s}]")));
        names.extend((1..=self.space.n_b()).map(|s| format!("mu_b[{s}]")));
        names.push("sigma_a".into());
        names.push("sigma_b".into());
        names.extend((1..=self.n_global()).map(|g| format!("pi[{g}]")));
        names.extend(self.offdiag_pairs().map(|(j, k)| format!("alpha[{},{}]", j + 1, k + 1)));
        for (j, k) in self.offdiag_pairs() {
            for c in 0..self.n_covariates {
                names.push(format!("beta[{},{}][{}]", j + 1, k + 1, cov_name(covariates, c)));
            }
        }
        names
    }
}

fn cov_name(covariates: &[String], c: usize) -> String {
    covariates.get(c).cloned().unwrap_or_else(|| format!("x{}", c + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupled_dimension_formula() {
        for p in 0..4 {
            let l = ParamLayout::new(StateSpace::coupled(), p);
            assert_eq!(l.dim(), 2 + 2 + 2 + 3 + 12 + 12 * p);
            assert_eq!(l.unconstrained_names(&[]).len(), l.dim());
        }
    }

    #[test]
    fn single_state_variants() {
        let l = ParamLayout::new(StateSpace::new(1, 2).unwrap(), 2);
        assert_eq!(l.dim(), 1 + 2 + 2 + 1 + 2 + 4);
        let l = ParamLayout::new(StateSpace::new(1, 1).unwrap(), 2);
        assert_eq!(l.dim(), 4);
        assert_eq!(l.offdiag_pairs().count(), 0);
    }

    #[test]
    fn offdiag_order_matches_intercept_table() {
        let l = ParamLayout::new(StateSpace::coupled(), 0);
        let pairs: Vec<_> = l.offdiag_pairs().collect();
        assert_eq!(pairs[0], (0, 1));
        assert_eq!(pairs[2], (0, 3));
        assert_eq!(pairs[3], (1, 0));
        assert_eq!(pairs[11], (3, 2));
    }
}
