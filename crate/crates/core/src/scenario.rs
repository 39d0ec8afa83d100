//! A reference synthetic cohort: emission levels of a glycated-haemoglobin
//! style marker (disease A, log scale) and a depression score (disease B,
//! log scale), sticky transitions with asymmetric coupling, and a
//! within-patient treatment acting on the `(2,2) -> (1,2)` transition.

use crate::data::{CovariateGenerator, GeneratorKind, SimulationConfig};
use crate::model::{Parameters, StateSpace};

pub const TREATMENT: &str = "treatment";
pub const TREATMENT_LAG: &str = "treatment_lag1";

/// Global states of the 2x2 model: `(1,1)=1, (1,2)=2, (2,1)=3, (2,2)=4`.
const ALPHA: [[f64; 4]; 4] = [
    [0.0, -2.0, -3.0, -4.0],
    [-1.5, 0.0, -4.0, -1.0],
    [-1.5, -4.0, 0.0, -2.0],
    [-3.5, -1.5, -2.0, 0.0],
];

/// True parameters with `treatment_effect` on the treatment coefficient of
/// the `4 -> 2` transition and every other coefficient zero. Covariates
/// are `[treatment, treatment_lag1]`.
pub fn reference_parameters(treatment_effect: f64) -> Parameters {
    let mut p = Parameters::neutral(StateSpace::coupled(), 2);
    p.mu_a = vec![4.55, 4.70];
    p.sigma_a = 0.09;
    p.mu_b = vec![2.86, 3.43];
    p.sigma_b = 0.30;
    p.pi = vec![0.4, 0.2, 0.2, 0.2];
    p.alpha = ALPHA.iter().map(|r| r.to_vec()).collect();
    p.beta[3][1][0] = treatment_effect;
    p
}

pub fn reference_generators() -> Vec<CovariateGenerator> {
    vec![
        CovariateGenerator::new(TREATMENT, GeneratorKind::Treatment { rate: 0.5 }),
        CovariateGenerator::new(
            TREATMENT_LAG,
            GeneratorKind::Lag {
                source: TREATMENT.into(),
                lag: 1,
            },
        ),
    ]
}

/// `n_patients` series of 4 to 10 steps.
pub fn reference_simulation(n_patients: usize, treatment_effect: f64, seed: u64) -> SimulationConfig {
    SimulationConfig {
        n_patients,
        t_min: 4,
        t_max: 10,
        true_params: reference_parameters(treatment_effect),
        covariate_generators: reference_generators(),
        seed,
    }
}
