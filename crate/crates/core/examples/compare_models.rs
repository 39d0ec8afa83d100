//! Fit the coupled model and the two single-chain simplifications to the
//! same cohort and rank them by patient-level PSIS-LOO.
//!
//! cargo run --release --example compare_models -- [n_patients]

use comorbidity_hmm::compare::{fit_variants, DEFAULT_VARIANTS};
use comorbidity_hmm::data::simulate_dataset;
use comorbidity_hmm::model::StateSpace;
use comorbidity_hmm::sampler::ChainConfig;
use comorbidity_hmm::scenario::reference_simulation;

fn main() -> comorbidity_hmm::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(80);
    let data = simulate_dataset(&reference_simulation(n, 2.0, 7))?;
    let config = ChainConfig {
        n_chains: 2,
        n_warmup: 300,
        n_sampling: 300,
        ..ChainConfig::default()
    };
    let spaces: Vec<StateSpace> = DEFAULT_VARIANTS
        .iter()
        .map(|&(a, b)| StateSpace::new(a, b))
        .collect::<Result<_, _>>()?;
    let (report, _) = fit_variants(&data, &config, &spaces)?;
    print!("{}", report.to_table());
    for row in &report.rows {
        if let Some(m) = &row.metrics {
            println!("{}: elpd_diff {:.1} (SE {:.1})", row.label(), m.elpd_diff, m.se_diff);
        }
    }
    Ok(())
}
