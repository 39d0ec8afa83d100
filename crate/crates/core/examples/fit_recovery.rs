//! Simulate the reference cohort, fit the coupled model and compare the
//! posterior with the planted truth.
//!
//! cargo run --release --example fit_recovery -- [n_patients] [n_warmup] [n_sampling] [seed] [effect]
//!
//! `effect` is the planted treatment coefficient on `(2,2) -> (1,2)`
//! (default 2); the spill-over contrast is printed at the end.

use std::time::Instant;

use comorbidity_hmm::data::simulate_dataset;
use comorbidity_hmm::fit_model;
use comorbidity_hmm::inference::{covariate_means, spillover, SpilloverSpec};
use comorbidity_hmm::math::{mean, quantiles};
use comorbidity_hmm::model::StateSpace;
use comorbidity_hmm::sampler::ChainConfig;
use comorbidity_hmm::scenario::{reference_parameters, reference_simulation, TREATMENT};
use comorbidity_hmm::transforms::flatten_reported;

fn arg(i: usize, default: u64) -> u64 {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> comorbidity_hmm::Result<()> {
    let n = arg(1, 200) as usize;
    let config = ChainConfig {
        n_chains: 4,
        n_warmup: arg(2, 500) as usize,
        n_sampling: arg(3, 500) as usize,
        seed: arg(4, 2024),
        ..ChainConfig::default()
    };
    let effect: f64 = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let data = simulate_dataset(&reference_simulation(n, effect, 7))?;
    println!("{} patients, {} observations", data.n_patients(), data.n_rows());

    let start = Instant::now();
    let fit = fit_model(&data, StateSpace::coupled(), &config)?;
    println!(
        "sampled in {:.1}s, {} divergent, max rhat {:.3}, min ess {:.0}",
        start.elapsed().as_secs_f64(),
        fit.n_divergent(),
        fit.diagnostics.max_rhat(),
        fit.diagnostics.min_ess()
    );
    for a in &fit.draws.adaptation {
        println!("chain {} step size {:.4}", a.chain, a.step_size);
    }

    let truth = flatten_reported(&reference_parameters(effect));
    let series = fit.samples.series();
    let mut covered = 0;
    println!("{:<34}{:>9}{:>9}{:>9}{:>9}{:>7}", "parameter", "truth", "mean", "q05", "q95", "rhat");
    for (k, name) in fit.samples.names().iter().enumerate() {
        let all: Vec<f64> = series[k].iter().flatten().copied().collect();
        let q = quantiles(&all, &[0.05, 0.95]);
        let inside = q[0] <= truth[k] && truth[k] <= q[1];
        covered += usize::from(inside);
        println!(
            "{:<34}{:>9.3}{:>9.3}{:>9.3}{:>9.3}{:>7.3}{}",
            name,
            truth[k],
            mean(&all),
            q[0],
            q[1],
            fit.diagnostics.rhat[k].unwrap_or(f64::NAN),
            if inside { "" } else { "  *" }
        );
    }
    println!("90% intervals cover {covered} of {} true values", truth.len());

    let spec = SpilloverSpec::new(TREATMENT, 0.5, 0.0);
    let report = spillover(fit.samples.draws(), &data.covariate_names, &covariate_means(&data), &spec)?;
    print!("{}", report.to_table());
    Ok(())
}
