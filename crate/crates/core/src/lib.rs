//! Coupled hidden Markov model for two interacting chronic diseases.
//!
//! Each disease has its own latent state chain; the pair evolves as one
//! Markov chain on the product space with covariate-dependent transition
//! probabilities. The crate covers simulation, exact likelihood, Bayesian
//! fitting with a No-U-Turn sampler, decoding, predictive checks,
//! spill-over estimation and model comparison.

pub mod cli;
pub mod compare;
pub mod data;
pub mod error;
pub mod fit;
pub mod inference;
pub mod likelihood;
pub mod math;
pub mod model;
pub mod sampler;
pub mod scenario;
pub mod transforms;

pub use error::{Error, Result};
pub use fit::{fit_model, Fit, PosteriorSamples};
