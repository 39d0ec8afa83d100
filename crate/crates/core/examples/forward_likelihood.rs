//! Exact log-likelihood of simulated patients by the forward recursion,
//! checked against path enumeration on a short series.

use comorbidity_hmm::data::simulate_dataset;
use comorbidity_hmm::likelihood::{brute_force_loglik, forward_loglik_patient, BRUTE_FORCE_MAX_T};
use comorbidity_hmm::scenario::{reference_parameters, reference_simulation};

fn main() -> comorbidity_hmm::Result<()> {
    let params = reference_parameters(2.0);
    let data = simulate_dataset(&reference_simulation(20, 2.0, 3))?;

    let mut total = 0.0;
    for p in &data.patients {
        total += forward_loglik_patient(&params, p)?;
    }
    println!("log-likelihood of {} patients at the truth: {total:.3}", data.n_patients());

    let short = data.patients.iter().find(|p| p.len() <= BRUTE_FORCE_MAX_T).expect("a short series");
    let fwd = forward_loglik_patient(&params, short)?;
    let brute = brute_force_loglik(&params, short)?;
    println!(
        "patient {} (T = {}): forward {fwd:.10}, enumeration {brute:.10}, |diff| {:.1e}",
        short.id,
        short.len(),
        (fwd - brute).abs()
    );
    Ok(())
}
