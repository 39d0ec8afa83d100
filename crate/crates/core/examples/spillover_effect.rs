//! The spill-over contrast along (2,2) -> (1,2) -> (1,1): how much a
//! disease-A treatment changes the chance that disease B also stabilizes.
//!
//! Uses a short fit so it finishes in a few minutes; pass `truth` to
//! evaluate at the planted parameters instead.

use comorbidity_hmm::data::simulate_dataset;
use comorbidity_hmm::fit_model;
use comorbidity_hmm::inference::{covariate_means, spillover, SpilloverSpec};
use comorbidity_hmm::model::StateSpace;
use comorbidity_hmm::sampler::ChainConfig;
use comorbidity_hmm::scenario::{reference_parameters, reference_simulation, TREATMENT};

fn main() -> comorbidity_hmm::Result<()> {
    let data = simulate_dataset(&reference_simulation(80, 2.0, 11))?;
    let profile = covariate_means(&data);
    let spec = SpilloverSpec::new(TREATMENT, 0.5, 0.0);

    let draws = if std::env::args().nth(1).as_deref() == Some("truth") {
        vec![reference_parameters(2.0)]
    } else {
        let config = ChainConfig {
            n_chains: 2,
            n_warmup: 300,
            n_sampling: 300,
            ..ChainConfig::default()
        };
        let fit = fit_model(&data, StateSpace::coupled(), &config)?;
        println!("fit: max rhat {:.3}", fit.diagnostics.max_rhat());
        fit.samples.draws().to_vec()
    };
    let report = spillover(&draws, &data.covariate_names, &profile, &spec)?;
    print!("{}", report.to_table());
    Ok(())
}
