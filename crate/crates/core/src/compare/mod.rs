//! Patient-level predictive comparison: WAIC, PSIS-LOO and the driver
//! that fits the simplified variants.

mod psis;
mod report;
mod waic;

pub use psis::{gpdfit, psis_loo, psis_smooth, qgpd, GpdFit, ParetoKCounts, PsisLoo, MIN_STABLE_DRAWS};
pub use report::{
    check_variants, fit_variants, CompareReport, CompareRow, VariantMetrics, VariantOutcome,
    DEFAULT_VARIANTS,
};
pub use waic::{waic, Waic};
