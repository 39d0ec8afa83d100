//! Chain initialization on the coupled model.

use comorbidity_hmm::data::simulate_dataset;
use comorbidity_hmm::likelihood::LogPosterior;
use comorbidity_hmm::model::StateSpace;
use comorbidity_hmm::sampler::{initialize_chains, ChainConfig, LogDensity};
use comorbidity_hmm::scenario::reference_simulation;
use comorbidity_hmm::transforms::{constrain, CovariateDesign, ParamLayout};

fn target() -> LogPosterior {
    let data = simulate_dataset(&reference_simulation(40, 2.0, 2)).unwrap();
    let design = CovariateDesign::from_data(&data).unwrap();
    let rotated = design.rotate_dataset(&data).unwrap();
    LogPosterior::new(ParamLayout::new(StateSpace::coupled(), 2), rotated).unwrap()
}

#[test]
fn initial_points_have_finite_density_and_differ() {
    let target = target();
    let config = ChainConfig::default();
    let inits = initialize_chains(&target, &config).unwrap();
    assert_eq!(inits.len(), config.n_chains);
    let mut grad = vec![0.0; target.dim()];
    for q in &inits {
        assert!(target.logp_and_grad(q, &mut grad).is_finite());
        let (params, _) = constrain(q, target.layout()).unwrap();
        // emission means start inside the data range
        assert!(params.mu_a[0] > 4.0 && params.mu_a[1] < 5.2, "{:?}", params.mu_a);
        assert!(params.mu_b[0] > 2.0 && params.mu_b[1] < 4.5, "{:?}", params.mu_b);
    }
    assert_ne!(inits[0], inits[1]);
}

#[test]
fn initialization_is_seeded() {
    let target = target();
    let config = ChainConfig { seed: 17, ..ChainConfig::default() };
    assert_eq!(
        initialize_chains(&target, &config).unwrap(),
        initialize_chains(&target, &config).unwrap()
    );
}
