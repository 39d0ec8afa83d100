//! Viterbi decoding of a simulated cohort under the true parameters and
//! the share of time steps whose global state is recovered.

use comorbidity_hmm::data::simulate_with_states;
use comorbidity_hmm::inference::decode_dataset;
use comorbidity_hmm::scenario::{reference_parameters, reference_simulation};

fn main() -> comorbidity_hmm::Result<()> {
    let sim = simulate_with_states(&reference_simulation(100, 2.0, 5))?;
    let paths = decode_dataset(&reference_parameters(2.0), &sim.data)?;

    let mut hits = 0;
    let mut total = 0;
    let mut confusion = [[0usize; 4]; 4];
    for (path, truth) in paths.iter().zip(&sim.states) {
        for (&d, &s) in path.states.iter().zip(truth) {
            confusion[s][d] += 1;
            hits += usize::from(d == s);
            total += 1;
        }
    }
    println!("{hits} of {total} states recovered ({:.1}%)", 100.0 * hits as f64 / total as f64);
    println!("rows: true state, columns: decoded");
    for (s, row) in confusion.iter().enumerate() {
        println!("  {}  {row:?}", s + 1);
    }
    Ok(())
}
