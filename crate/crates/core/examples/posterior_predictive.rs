//! Posterior predictive replicates and interval coverage.
//!
//! Draws from a short fit are replayed: each replicate decodes the state
//! paths under one draw and re-emits measurements from those states.

use comorbidity_hmm::data::simulate_dataset;
use comorbidity_hmm::fit_model;
use comorbidity_hmm::inference::posterior_predictive;
use comorbidity_hmm::model::StateSpace;
use comorbidity_hmm::sampler::ChainConfig;
use comorbidity_hmm::scenario::reference_simulation;

fn main() -> comorbidity_hmm::Result<()> {
    let data = simulate_dataset(&reference_simulation(60, 2.0, 21))?;
    let config = ChainConfig {
        n_chains: 2,
        n_warmup: 250,
        n_sampling: 250,
        ..ChainConfig::default()
    };
    let fit = fit_model(&data, StateSpace::coupled(), &config)?;
    let ppc = posterior_predictive(fit.samples.draws(), &data, 200, 1)?;
    let c = &ppc.coverage;
    println!("{} observations, {} replicates", c.n_observations, c.n_replicates);
    println!("             50%     90%");
    for (label, cov) in [("disease A", c.disease_a), ("disease B", c.disease_b), ("pooled", c.overall)] {
        println!("{label:<10}{:>7.3}{:>8.3}", cov.central_50, cov.central_90);
    }
    let first = &ppc.intervals[0];
    println!(
        "patient {} t={} {}: observed {:.3}, 90% interval [{:.3}, {:.3}]",
        first.patient_id, first.t, first.disease, first.observed, first.quantiles[0], first.quantiles[4]
    );
    Ok(())
}
