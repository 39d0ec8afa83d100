//! PSIS-LOO and WAIC from a matrix of pointwise log-likelihoods, including
//! one influential unit whose Pareto k is flagged.

use comorbidity_hmm::compare::{psis_loo, waic};
use comorbidity_hmm::likelihood::PointwiseLogLik;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> comorbidity_hmm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n_draws = 2000;
    let ids: Vec<String> = (1..=6).map(|i| format!("patient_{i}")).collect();
    let values: Vec<Vec<f64>> = (0..n_draws)
        .map(|_| {
            ids.iter()
                .enumerate()
                .map(|(i, _)| {
                    // the last unit has a heavy right tail in its likelihood
                    let sd = if i == 5 { 3.0 } else { 0.3 };
                    -5.0 + Normal::new(0.0, sd).unwrap().sample(&mut rng)
                })
                .collect()
        })
        .collect();
    let pw = PointwiseLogLik::new(ids.clone(), values)?;

    let loo = psis_loo(&pw)?;
    let w = waic(&pw)?;
    println!("elpd_loo {:.2} (SE {:.2}), p_loo {:.2}", loo.elpd_loo, loo.se_elpd_loo, loo.p_loo);
    println!("elpd_waic {:.2}, p_waic {:.2}, waic {:.2}", w.elpd_waic, w.p_waic, w.waic);
    for (id, k) in ids.iter().zip(&loo.pareto_k) {
        println!("{id}: k = {k:.2}");
    }
    for warning in &loo.warnings {
        println!("warning: {warning}");
    }
    Ok(())
}
