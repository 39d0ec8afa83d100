use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Latent state sets of the two diseases and the global (product) state.
///
/// Global states are numbered row-major in `(s_a, s_b)`: with two states per
/// disease, `(1,1) -> 1`, `(1,2) -> 2`, `(2,1) -> 3`, `(2,2) -> 4`.
///
/// The public mapping functions are 1-based. Matrices and vectors elsewhere
/// in the crate are indexed 0-based in the same order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    n_a: usize,
    n_b: usize,
}

impl StateSpace {
    pub fn new(n_a: usize, n_b: usize) -> Result<Self> {
        if n_a == 0 || n_b == 0 {
            return Err(Error::validation(format!(
                "state counts must be >= 1, got n_a={n_a}, n_b={n_b}"
            )));
        }
        Ok(Self { n_a, n_b })
    }

    /// Two states per disease: the default model.
    pub fn coupled() -> Self {
        Self { n_a: 2, n_b: 2 }
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn n_global(&self) -> usize {
        self.n_a * self.n_b
    }

    /// Maps `(s_a, s_b)` (1-based) to the global state (1-based).
    pub fn global_index(&self, s_a: usize, s_b: usize) -> Result<usize> {
        if s_a == 0 || s_a > self.n_a || s_b == 0 || s_b > self.n_b {
            return Err(Error::validation(format!(
                "state ({s_a},{s_b}) outside {}x{} space",
                self.n_a, self.n_b
            )));
        }
        Ok((s_a - 1) * self.n_b + s_b)
    }

    /// Inverse of [`global_index`](Self::global_index).
    pub fn split_global(&self, g: usize) -> Result<(usize, usize)> {
        if g == 0 || g > self.n_global() {
            return Err(Error::validation(format!(
                "global state {g} outside 1..={}",
                self.n_global()
            )));
        }
        let g0 = g - 1;
        Ok((g0 / self.n_b + 1, g0 % self.n_b + 1))
    }

    /// Disease-A state (0-based) of a 0-based global state.
    #[inline]
    pub fn state_a(&self, g0: usize) -> usize {
        g0 / self.n_b
    }

    /// Disease-B state (0-based) of a 0-based global state.
    #[inline]
    pub fn state_b(&self, g0: usize) -> usize {
        g0 % self.n_b
    }
}
