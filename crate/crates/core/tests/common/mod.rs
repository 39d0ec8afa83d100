#![allow(dead_code)]

use comorbidity_hmm::data::{PanelDataset, PatientSeries, Provenance};
use comorbidity_hmm::model::{Parameters, StateSpace};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn random_space<R: Rng>(rng: &mut R) -> StateSpace {
    let dims = [(2, 2), (1, 2), (2, 1), (3, 2), (2, 3)];
    let (a, b) = dims[rng.random_range(0..dims.len())];
    StateSpace::new(a, b).unwrap()
}

fn sorted_means<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut acc = rng.random_range(-1.0..1.0);
    (0..n)
        .map(|_| {
            let v = acc;
            acc += rng.random_range(0.2..1.5);
            v
        })
        .collect()
}

/// A valid parameter set with moderately spread logits and no exact ties.
pub fn random_params<R: Rng>(rng: &mut R, space: StateSpace, p: usize) -> Parameters {
    let g = space.n_global();
    let mut params = Parameters::neutral(space, p);
    params.mu_a = sorted_means(rng, space.n_a());
    params.mu_b = sorted_means(rng, space.n_b());
    params.sigma_a = rng.random_range(0.3..1.5);
    params.sigma_b = rng.random_range(0.3..1.5);
    let w: Vec<f64> = (0..g).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    params.pi = w.iter().map(|v| v / total).collect();
    let n = Normal::new(0.0, 1.5).unwrap();
    for j in 0..g {
        for k in 0..g {
            if j != k {
                params.alpha[j][k] = n.sample(rng);
                for c in 0..p {
                    params.beta[j][k][c] = 0.7 * n.sample(rng);
                }
            }
        }
    }
    params
}

/// Measurements scattered around the emission means so every state has
/// non-negligible support.
pub fn random_patient<R: Rng>(rng: &mut R, params: &Parameters, id: &str, t_len: usize) -> PatientSeries {
    let p = params.n_covariates();
    let pick = |rng: &mut R, mu: &[f64], sd: f64| mu[rng.random_range(0..mu.len())] + rng.random_range(-1.0..1.0) * sd;
    let y_a = (0..t_len).map(|_| pick(rng, &params.mu_a, params.sigma_a)).collect();
    let y_b = (0..t_len).map(|_| pick(rng, &params.mu_b, params.sigma_b)).collect();
    let x = (0..t_len)
        .map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    PatientSeries::new(id, y_a, y_b, x)
}

pub fn random_dataset<R: Rng>(rng: &mut R, params: &Parameters, n: usize, t_min: usize, t_max: usize) -> PanelDataset {
    let patients = (0..n)
        .map(|i| {
            let t = rng.random_range(t_min..=t_max);
            random_patient(rng, params, &format!("p{i}"), t)
        })
        .collect();
    PanelDataset {
        patients,
        covariate_names: (1..=params.n_covariates()).map(|c| format!("x{c}")).collect(),
        meta: Provenance::Derived("test".into()),
    }
}
