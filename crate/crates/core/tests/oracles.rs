//! The dynamic programs against exhaustive enumeration of state paths.

mod common;

use std::time::Instant;

use comorbidity_hmm::inference::{brute_force_viterbi, viterbi};
use comorbidity_hmm::likelihood::{brute_force_loglik, forward_loglik_patient};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn forward_matches_enumeration_on_200_instances() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let space = common::random_space(&mut rng);
        let p = rng.random_range(0..3);
        let params = common::random_params(&mut rng, space, p);
        let t_len = rng.random_range(2..=6);
        let patient = common::random_patient(&mut rng, &params, "x", t_len);
        let fwd = forward_loglik_patient(&params, &patient).unwrap();
        let brute = brute_force_loglik(&params, &patient).unwrap();
        let err = (fwd - brute).abs();
        worst = worst.max(err);
        assert!(err < 1e-8, "instance {i}: forward {fwd} vs enumeration {brute}");
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
    println!("worst |forward - enumeration| = {worst:.2e}");
}

#[test]
fn viterbi_matches_enumeration_on_100_instances() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..100 {
        let space = common::random_space(&mut rng);
        let p = rng.random_range(0..3);
        let params = common::random_params(&mut rng, space, p);
        let t_len = rng.random_range(1..=6);
        let patient = common::random_patient(&mut rng, &params, "x", t_len);
        let dp = viterbi(&params, &patient).unwrap();
        let brute = brute_force_viterbi(&params, &patient).unwrap();
        assert_eq!(dp, brute, "instance {i}");
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn forward_is_stable_for_long_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let params = common::random_params(&mut rng, comorbidity_hmm::model::StateSpace::coupled(), 1);
    let patient = common::random_patient(&mut rng, &params, "long", 5000);
    let ll = forward_loglik_patient(&params, &patient).unwrap();
    assert!(ll.is_finite());
}
