//! Exact marginal likelihood of the coupled model, its brute-force
//! reference, the log posterior with gradient, and patient-level
//! pointwise log-likelihoods.

mod brute_force;
mod forward;
mod pointwise;
mod posterior;

pub use brute_force::{brute_force_loglik, BRUTE_FORCE_MAX_T};
pub use forward::{forward_loglik_patient, patient_loglik_gradient};
pub use pointwise::{pointwise_loglik, PointwiseLogLik};
pub use posterior::{grad_log_posterior, total_log_posterior, LogPosterior, PosteriorTerms};
