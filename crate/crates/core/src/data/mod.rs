//! Panel data: CSV ingestion, covariate engineering and the synthetic
//! cohort generator.

mod covariates;
mod panel;
mod simulate;

pub use covariates::{center_within, lag_covariate};
pub use panel::{
    load_panel, read_panel, write_panel, write_panel_to, CovariateSpec, PanelDataset, PatientSeries,
    Provenance,
};
pub use simulate::{
    simulate_dataset, simulate_with_states, CovariateGenerator, GeneratorKind, Simulation,
    SimulationConfig,
};

