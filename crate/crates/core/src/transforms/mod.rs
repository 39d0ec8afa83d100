//! Unconstrained parameterization, priors and the covariate QR rotation.

mod bijection;
mod layout;
mod prior;
mod qr;

pub use bijection::{
    constrain, constrain_full, flatten_reported, pullback, unconstrain, unflatten_reported, Constrained, ParamGradient,
};
pub use layout::ParamLayout;
pub use prior::{log_prior, log_prior_gradient, ALPHA_PRIOR_SD, BETA_PRIOR_SD, MU_PRIOR_SD};
pub use qr::{qr_reparam, qr_reparam_named, CovariateDesign, QrBasis};
