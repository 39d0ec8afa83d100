//! Draw a synthetic cohort from the reference parameters and print the
//! first patient plus how often each global state is visited.
//!
//! cargo run --example simulate_cohort -- [n_patients] [seed]

use comorbidity_hmm::data::{simulate_with_states, write_panel_to};
use comorbidity_hmm::scenario::reference_simulation;

fn main() -> comorbidity_hmm::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let sim = simulate_with_states(&reference_simulation(n, 2.0, seed))?;
    let mut occupancy = [0usize; 4];
    for path in &sim.states {
        for &g in path {
            occupancy[g] += 1;
        }
    }
    println!("{} patients, {} observations", sim.data.n_patients(), sim.data.n_rows());
    println!("visits to (1,1) (1,2) (2,1) (2,2): {occupancy:?}");

    let first = comorbidity_hmm::data::PanelDataset {
        patients: sim.data.patients[..1].to_vec(),
        ..sim.data.clone()
    };
    let mut out = Vec::new();
    write_panel_to(&first, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    println!("latent states: {:?}", sim.states[0].iter().map(|g| g + 1).collect::<Vec<_>>());
    Ok(())
}
