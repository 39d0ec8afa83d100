//! State space, parameter container, transition mechanism and emission
//! density of the coupled model.

mod emission;
mod parameters;
mod state_space;
mod transition;

pub use emission::{emission_logpdf, normal_logpdf};
pub use parameters::Parameters;
pub use state_space::StateSpace;
pub use transition::{
    build_eta, log_transition_matrix, softmax_row, transition_matrix, SquareMatrix,
};

pub(crate) use transition::log_gamma_into;
