use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    center_within, lag_covariate, load_panel, simulate_with_states, CovariateSpec, PanelDataset,
    SimulationConfig, Simulation,
};
use crate::error::{Error, Result};
use crate::inference::SpilloverSpec;
use crate::model::StateSpace;
use crate::sampler::ChainConfig;
use crate::scenario::{reference_simulation, TREATMENT};

/// Environment variable naming the root under which runs without an
/// explicit output directory are written.
pub const OUTPUT_ROOT_ENV: &str = "CHMM_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    File {
        path: PathBuf,
        #[serde(default)]
        schema: CovariateSpec,
    },
    Simulate(SimulationConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagDirective {
    pub variable: String,
    pub lag: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_a: usize,
    pub n_b: usize,
    /// Covariates entering the transitions, after derivations. `None`
    /// uses every column.
    pub covariates: Option<Vec<String>>,
    /// Columns centered within patient, producing `<name>_centered`.
    pub center: Vec<String>,
    /// Lags applied after centering, producing `<variable>_lag<lag>`.
    pub lag: Vec<LagDirective>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_a: 2,
            n_b: 2,
            covariates: None,
            center: Vec::new(),
            lag: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpcConfig {
    pub n_rep: usize,
}

impl Default for PpcConfig {
    fn default() -> Self {
        Self { n_rep: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpilloverConfig {
    pub treatment: String,
    /// Lag-1 treatment column; `<treatment>_lag1` when omitted.
    pub treatment_lag: Option<String>,
    pub treated_value: f64,
    pub untreated_value: f64,
    /// 1-based global states of the two-step path.
    pub path: [usize; 3],
    /// Covariate profile; defaults to the covariate means.
    pub profile: Option<Vec<f64>>,
}

impl SpilloverConfig {
    pub fn spec(&self) -> SpilloverSpec {
        SpilloverSpec {
            treatment: self.treatment.clone(),
            treatment_lag: self.treatment_lag.clone(),
            treated_value: self.treated_value,
            untreated_value: self.untreated_value,
            path: self.path,
        }
    }
}

impl Default for SpilloverConfig {
    fn default() -> Self {
        let spec = SpilloverSpec::new(TREATMENT, 0.5, 0.0);
        Self {
            treatment: spec.treatment,
            treatment_lag: None,
            treated_value: spec.treated_value,
            untreated_value: spec.untreated_value,
            path: spec.path,
            profile: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub variants: Vec<(usize, usize)>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            variants: crate::compare::DEFAULT_VARIANTS.to_vec(),
        }
    }
}

/// A complete run description. Every field has a default, so `{}` is a
/// valid configuration: the reference simulation fitted with the 2x2
/// model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    pub model: ModelConfig,
    pub sampler: ChainConfig,
    pub output_dir: Option<PathBuf>,
    /// Overrides `sampler.seed` and seeds replicate generation.
    pub seed: Option<u64>,
    pub ppc: PpcConfig,
    pub spillover: SpilloverConfig,
    pub compare: CompareConfig,
    /// Exit with status 5 when a fit does not converge.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Simulate(reference_simulation(200, 2.0, 7)),
            model: ModelConfig::default(),
            sampler: ChainConfig {
                n_warmup: 500,
                n_sampling: 500,
                ..ChainConfig::default()
            },
            output_dir: None,
            seed: None,
            ppc: PpcConfig::default(),
            spillover: SpilloverConfig::default(),
            compare: CompareConfig::default(),
            strict: false,
        }
    }
}

impl RunConfig {
    /// Parses JSON, naming the offending field path on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Usage(format!("config field '{path}': {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // relative data paths are resolved against the config's directory
        if let DataSource::File { path: p, .. } = &mut cfg.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(self.sampler.seed)
    }

    pub fn space(&self) -> Result<StateSpace> {
        StateSpace::new(self.model.n_a, self.model.n_b)
            .map_err(|e| Error::Usage(format!("config field 'model': {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.space()?;
        self.sampler
            .validate()
            .map_err(|e| Error::Usage(format!("config field 'sampler': {e}")))?;
        if let DataSource::Simulate(sim) = &self.data {
            sim.validate()
                .map_err(|e| Error::Usage(format!("config field 'data.simulate': {e}")))?;
        }
        if self.ppc.n_rep < 2 {
            return Err(Error::Usage("config field 'ppc.n_rep': must be >= 2".into()));
        }
        Ok(())
    }

    /// Raw data (and latent paths when simulated), before derivations.
    pub fn load_raw(&self) -> Result<(PanelDataset, Option<Simulation>)> {
        match &self.data {
            DataSource::File { path, schema } => Ok((load_panel(path, schema)?, None)),
            DataSource::Simulate(sim) => {
                let s = simulate_with_states(sim)?;
                Ok((s.data.clone(), Some(s)))
            }
        }
    }

    /// Data after centering, lagging and covariate selection: exactly what
    /// the model sees.
    pub fn model_data(&self) -> Result<PanelDataset> {
        let (raw, _) = self.load_raw()?;
        self.derive(raw)
    }

    pub fn derive(&self, mut data: PanelDataset) -> Result<PanelDataset> {
        for var in &self.model.center {
            data = center_within(&data, var)?;
        }
        for d in &self.model.lag {
            data = lag_covariate(&data, &d.variable, d.lag)?;
        }
        if let Some(names) = &self.model.covariates {
            if let Some(missing) = names.iter().find(|n| !data.covariate_names.contains(n)) {
                return Err(Error::validation(format!(
                    "covariate '{missing}' named in model.covariates does not exist; available: {:?}",
                    data.covariate_names
                )));
            }
            data = data.select_covariates(names)?;
        }
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn bad_field_reports_its_path() {
        let e = RunConfig::from_json(r#"{"sampler": {"n_chains": "four"}}"#).unwrap_err();
        match e {
            Error::Usage(msg) => assert!(msg.contains("sampler.n_chains"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"{
          "data": { "file": { "path": "panel.csv",
                              "schema": { "covariates": ["treatment", "age"], "log_y_a": false } } },
          "model": {
            "n_a": 2, "n_b": 2,
            "center": ["treatment"],
            "lag": [{ "variable": "treatment_centered", "lag": 1 }],
            "covariates": ["treatment_centered", "treatment_centered_lag1", "age"]
          },
          "sampler": { "n_chains": 4, "n_warmup": 1500, "n_sampling": 1500,
                       "target_accept": 0.8, "max_tree_depth": 10 },
          "seed": 42,
          "ppc": { "n_rep": 200 },
          "spillover": { "treatment": "treatment_centered", "treatment_lag": "treatment_centered_lag1",
                         "treated_value": 0.5, "untreated_value": 0.0, "path": [4, 2, 1] },
          "compare": { "variants": [[2, 2], [1, 2], [2, 1]] },
          "strict": false
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.effective_seed(), 42);
        assert_eq!(cfg.spillover.spec().treatment_lag.as_deref(), Some("treatment_centered_lag1"));
    }

    #[test]
    fn derivations_run_in_order() {
        use crate::data::read_panel;
        let csv = "patient_id,t,y_a,y_b,treatment\na,1,1,1,0\na,2,1,1,1\na,3,1,1,1\n";
        let raw = read_panel(csv.as_bytes(), &CovariateSpec::default()).unwrap();
        let cfg = RunConfig::from_json(
            r#"{"model": {"center": ["treatment"], "lag": [{"variable": "treatment_centered", "lag": 1}],
                          "covariates": ["treatment_centered_lag1"]}}"#,
        )
        .unwrap();
        let data = cfg.derive(raw.clone()).unwrap();
        assert_eq!(data.covariate_names, vec!["treatment_centered_lag1"]);
        let x: Vec<f64> = data.patients[0].x.iter().map(|r| r[0]).collect();
        assert!((x[1] + 2.0 / 3.0).abs() < 1e-12 && (x[2] - 1.0 / 3.0).abs() < 1e-12 && x[0] == 0.0);

        let bad = RunConfig::from_json(r#"{"model": {"covariates": ["dose"]}}"#).unwrap();
        assert!(matches!(bad.derive(raw), Err(Error::Validation(_))));
    }
}
