//! Synthetic cohorts drawn from the coupled generative process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{PanelDataset, PatientSeries, Provenance};
use crate::error::{Error, Result};
use crate::model::{log_gamma_into, Parameters};

/// Distribution of one simulated covariate column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Independent standard normal at every step.
    Normal,
    /// One standard normal draw per patient, constant over time
    /// (e.g. age at baseline).
    PatientNormal,
    /// One Bernoulli draw per patient, constant over time (e.g. sex).
    PatientBernoulli { rate: f64 },
    /// `slope * (t - 1)`, a within-patient time trend.
    LinearTime { slope: f64 },
    /// Bernoulli treatment indicator at every step, centered on the
    /// patient's own mean.
    Treatment { rate: f64 },
    /// Lagged copy of an earlier column (after its own centering), with 0
    /// before the lag horizon.
    Lag { source: String, lag: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateGenerator {
    pub name: String,
    #[serde(flatten)]
    pub kind: GeneratorKind,
}

impl CovariateGenerator {
    pub fn new(name: impl Into<String>, kind: GeneratorKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_patients: usize,
    pub t_min: usize,
    pub t_max: usize,
    pub true_params: Parameters,
    #[serde(default)]
    pub covariate_generators: Vec<CovariateGenerator>,
    pub seed: u64,
}

/// A simulated dataset together with the latent global-state paths
/// (0-based) that generated it.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub data: PanelDataset,
    pub states: Vec<Vec<usize>>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_min < 2 {
            return Err(Error::validation("t_min must be >= 2"));
        }
        if self.t_max < self.t_min {
            return Err(Error::validation("t_max must be >= t_min"));
        }
        self.true_params.validate()?;
        if self.true_params.n_covariates() != self.covariate_generators.len() {
            return Err(Error::validation(format!(
                "true_params has {} covariate coefficients but {} generators are configured",
                self.true_params.n_covariates(),
                self.covariate_generators.len()
            )));
        }
        for (i, g) in self.covariate_generators.iter().enumerate() {
            match &g.kind {
                GeneratorKind::PatientBernoulli { rate } | GeneratorKind::Treatment { rate } => {
                    if !(0.0..=1.0).contains(rate) {
                        return Err(Error::validation(format!(
                            "generator '{}': rate {rate} outside [0,1]",
                            g.name
                        )));
                    }
                }
                GeneratorKind::Lag { source, lag } => {
                    if *lag == 0 {
                        return Err(Error::validation(format!("generator '{}': lag must be >= 1", g.name)));
                    }
                    if !self.covariate_generators[..i].iter().any(|s| &s.name == source) {
                        return Err(Error::validation(format!(
                            "generator '{}' lags '{source}', which is not defined before it",
                            g.name
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn simulate_dataset(config: &SimulationConfig) -> Result<PanelDataset> {
    simulate_with_states(config).map(|s| s.data)
}

pub fn simulate_with_states(config: &SimulationConfig) -> Result<Simulation> {
    config.validate()?;
    let params = &config.true_params;
    let space = params.validate()?;
    let g = space.n_global();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut log_gamma = vec![0.0; g * g];

    let mut patients = Vec::with_capacity(config.n_patients);
    let mut all_states = Vec::with_capacity(config.n_patients);
    for i in 0..config.n_patients {
        let t_len = rng.random_range(config.t_min..=config.t_max);
        let x = draw_covariates(&config.covariate_generators, t_len, &mut rng);

        let mut states = Vec::with_capacity(t_len);
        states.push(categorical(&params.pi, &mut rng));
        for t in 1..t_len {
            log_gamma_into(&params.alpha, &params.beta, &x[t - 1], &mut log_gamma);
            let prev = states[t - 1];
            let row: Vec<f64> = log_gamma[prev * g..(prev + 1) * g].iter().map(|v| v.exp()).collect();
            states.push(categorical(&row, &mut rng));
        }

        let mut y_a = Vec::with_capacity(t_len);
        let mut y_b = Vec::with_capacity(t_len);
        for &s in &states {
            let za: f64 = rng.sample(StandardNormal);
            let zb: f64 = rng.sample(StandardNormal);
            y_a.push(params.mu_a[space.state_a(s)] + params.sigma_a * za);
            y_b.push(params.mu_b[space.state_b(s)] + params.sigma_b * zb);
        }
        patients.push(PatientSeries::new(format!("sim{:04}", i + 1), y_a, y_b, x));
        all_states.push(states);
    }

    let data = PanelDataset {
        patients,
        covariate_names: config.covariate_generators.iter().map(|g| g.name.clone()).collect(),
        meta: Provenance::Simulation { seed: config.seed },
    };
    Ok(Simulation {
        data,
        states: all_states,
    })
}

fn draw_covariates<R: Rng>(gens: &[CovariateGenerator], t_len: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(gens.len());
    for gen in gens {
        let col = match &gen.kind {
            GeneratorKind::Normal => (0..t_len).map(|_| rng.sample(StandardNormal)).collect(),
            GeneratorKind::PatientNormal => {
                let v: f64 = rng.sample(StandardNormal);
                vec![v; t_len]
            }
            GeneratorKind::PatientBernoulli { rate } => {
                let v = if rng.random::<f64>() < *rate { 1.0 } else { 0.0 };
                vec![v; t_len]
            }
            GeneratorKind::LinearTime { slope } => (0..t_len).map(|t| slope * t as f64).collect(),
            GeneratorKind::Treatment { rate } => {
                let raw: Vec<f64> = (0..t_len)
                    .map(|_| if rng.random::<f64>() < *rate { 1.0 } else { 0.0 })
                    .collect();
                let m = raw.iter().sum::<f64>() / t_len as f64;
                raw.into_iter().map(|v| v - m).collect()
            }
            GeneratorKind::Lag { source, lag } => {
                let src = gens
                    .iter()
                    .position(|g| &g.name == source)
                    .expect("validated lag source");
                let s = &columns[src];
                (0..t_len).map(|t| if t >= *lag { s[t - lag] } else { 0.0 }).collect()
            }
        };
        columns.push(col);
    }
    (0..t_len)
        .map(|t| columns.iter().map(|c| c[t]).collect())
        .collect()
}

/// Draws an index from unnormalized non-negative weights.
pub(crate) fn categorical<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::write_panel_to;
    use crate::model::{transition_matrix, build_eta, StateSpace};

    fn base_params(p: usize) -> Parameters {
        let mut params = Parameters::neutral(StateSpace::coupled(), p);
        params.mu_a = vec![4.55, 4.70];
        params.mu_b = vec![2.86, 3.43];
        params.sigma_a = 0.09;
        params.sigma_b = 0.30;
        params
    }

    fn config(params: Parameters, gens: Vec<CovariateGenerator>, n: usize, tmin: usize, tmax: usize) -> SimulationConfig {
        SimulationConfig {
            n_patients: n,
            t_min: tmin,
            t_max: tmax,
            true_params: params,
            covariate_generators: gens,
            seed: 7,
        }
    }

    #[test]
    fn same_seed_gives_identical_bytes() {
        let gens = vec![
            CovariateGenerator::new("age", GeneratorKind::PatientNormal),
            CovariateGenerator::new("met", GeneratorKind::Treatment { rate: 0.3 }),
            CovariateGenerator::new("met_lag1", GeneratorKind::Lag { source: "met".into(), lag: 1 }),
        ];
        let cfg = config(base_params(3), gens, 20, 4, 10);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_panel_to(&simulate_dataset(&cfg).unwrap(), &mut a).unwrap();
        write_panel_to(&simulate_dataset(&cfg).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lengths_within_bounds_and_treatment_centered() {
        let gens = vec![
            CovariateGenerator::new("met", GeneratorKind::Treatment { rate: 0.4 }),
            CovariateGenerator::new("met_lag1", GeneratorKind::Lag { source: "met".into(), lag: 1 }),
            CovariateGenerator::new("years", GeneratorKind::LinearTime { slope: 1.0 }),
        ];
        let d = simulate_dataset(&config(base_params(3), gens, 50, 4, 10)).unwrap();
        d.validate().unwrap();
        for p in &d.patients {
            assert!((4..=10).contains(&p.len()));
            let m: f64 = p.x.iter().map(|r| r[0]).sum::<f64>() / p.len() as f64;
            assert!(m.abs() < 1e-12);
            assert_eq!(p.x[0][1], 0.0);
            for t in 1..p.len() {
                assert_eq!(p.x[t][1], p.x[t - 1][0]);
                assert_eq!(p.x[t][2], t as f64);
            }
        }
    }

    #[test]
    fn tiny_sigma_makes_states_readable() {
        let mut params = base_params(0);
        params.sigma_a = 1e-6;
        params.sigma_b = 1e-6;
        let sim = simulate_with_states(&config(params.clone(), vec![], 30, 2, 6)).unwrap();
        let space = StateSpace::coupled();
        for (p, states) in sim.data.patients.iter().zip(&sim.states) {
            for (t, &s) in states.iter().enumerate() {
                assert!((p.y_a[t] - params.mu_a[space.state_a(s)]).abs() < 1e-4);
                assert!((p.y_b[t] - params.mu_b[space.state_b(s)]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn sticky_chain_rarely_switches() {
        let mut params = base_params(0);
        for j in 0..4 {
            for k in 0..4 {
                if j != k {
                    params.alpha[j][k] = -6.0;
                }
            }
        }
        // analytic switch probability per step: 3e^-6 / (1 + 3e^-6) ~ 0.0074
        let sim = simulate_with_states(&config(params, vec![], 1, 10_000, 10_000)).unwrap();
        let s = &sim.states[0];
        let switches = s.windows(2).filter(|w| w[0] != w[1]).count();
        let freq = switches as f64 / (s.len() - 1) as f64;
        assert!(freq < 0.05, "switch frequency {freq}");
    }

    #[test]
    fn empirical_transitions_match_analytic_gamma() {
        let mut params = base_params(1);
        params.alpha[0][1] = -1.0;
        params.alpha[1][3] = 0.8;
        params.alpha[2][0] = 1.2;
        params.alpha[3][2] = -0.5;
        params.beta[0][2][0] = 1.5;
        // constant covariate: linear-time with slope 0
        let gens = vec![CovariateGenerator::new("c", GeneratorKind::LinearTime { slope: 0.0 })];
        let sim = simulate_with_states(&config(params.clone(), gens, 1, 100_000, 100_000)).unwrap();
        let s = &sim.states[0];
        let mut counts = [[0usize; 4]; 4];
        for w in s.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        let gamma = transition_matrix(&build_eta(&params.alpha, &params.beta, &[0.0]).unwrap()).unwrap();
        for j in 0..4 {
            let n: usize = counts[j].iter().sum();
            for k in 0..4 {
                let emp = counts[j][k] as f64 / n as f64;
                assert!((emp - gamma.get(j, k)).abs() < 0.01, "({j},{k}): {emp} vs {}", gamma.get(j, k));
            }
        }
    }

    #[test]
    fn emissions_match_state_moments() {
        let mut params = base_params(0);
        // lock the chain in global state 3 (A acute, B stable)
        params.pi = vec![0.0, 0.0, 1.0, 0.0];
        for k in 0..4 {
            if k != 2 {
                params.alpha[2][k] = -40.0;
            }
        }
        let sim = simulate_with_states(&config(params.clone(), vec![], 1, 20_000, 20_000)).unwrap();
        assert!(sim.states[0].iter().all(|&s| s == 2));
        let p = &sim.data.patients[0];
        let n = p.len() as f64;
        for (ys, mu, sd) in [(&p.y_a, 4.70, 0.09), (&p.y_b, 2.86, 0.30)] {
            let m = ys.iter().sum::<f64>() / n;
            let v = ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
            assert!((m - mu).abs() < 3.0 * sd / n.sqrt());
            // SE of the sample SD is about sd / sqrt(2n)
            assert!((v.sqrt() - sd).abs() < 3.0 * sd / (2.0 * n).sqrt());
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = config(base_params(0), vec![], 5, 1, 4);
        assert!(simulate_dataset(&cfg).is_err());
        cfg.t_min = 5;
        cfg.t_max = 4;
        assert!(simulate_dataset(&cfg).is_err());
        let cfg = config(base_params(1), vec![], 5, 2, 4);
        assert!(simulate_dataset(&cfg).is_err());
        let gens = vec![CovariateGenerator::new("l", GeneratorKind::Lag { source: "x".into(), lag: 1 })];
        assert!(simulate_dataset(&config(base_params(1), gens, 5, 2, 4)).is_err());
    }

    #[test]
    fn config_json_mirrors_field_names() {
        let gens = vec![
            CovariateGenerator::new("met", GeneratorKind::Treatment { rate: 0.3 }),
            CovariateGenerator::new("met_lag1", GeneratorKind::Lag { source: "met".into(), lag: 1 }),
        ];
        let cfg = config(base_params(2), gens, 5, 2, 4);
        let text = serde_json::to_string(&cfg).unwrap();
        for key in ["n_patients", "t_min", "t_max", "true_params", "covariate_generators", "seed"] {
            assert!(text.contains(key));
        }
        let back: SimulationConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.covariate_generators, cfg.covariate_generators);
    }
}
