//! Post-fit analyses: decoding, posterior predictive checks, transition
//! summaries and the spill-over contrast.

mod ppc;
mod spillover;
mod transitions;
mod viterbi;

pub use ppc::{
    posterior_predictive, Coverage, CoverageSummary, ObservationInterval, PosteriorPredictive,
    ReplicateBundle,
};
pub use spillover::{
    spillover, spillover_by_profile, SpilloverReport, SpilloverSpec, QUOTIENT_OVERFLOW_TOLERANCE,
};
pub use transitions::{
    conditional_transition_summary, covariate_means, write_transition_csv, TransitionSummary,
};
pub use viterbi::{
    brute_force_viterbi, decode_dataset, viterbi, write_decoded_csv, DecodedPath,
    BRUTE_FORCE_VITERBI_MAX_T,
};
