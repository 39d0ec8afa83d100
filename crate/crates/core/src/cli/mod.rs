//! The `chmm` command-line interface.
//!
//! Every subcommand takes the same JSON run configuration. Flags override
//! the configuration, which overrides the built-in defaults. Post-fit
//! commands read the artifacts of an earlier `fit` and refuse them when
//! the model or data they were produced from differ from the current
//! configuration.

mod config;
mod output;

use std::ffi::OsString;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{
    CompareConfig, DataSource, LagDirective, ModelConfig, PpcConfig, RunConfig, SpilloverConfig,
    OUTPUT_ROOT_ENV,
};
pub use output::{manifest_name, read_manifest, sha256_hex, FitIdentity, Manifest, OutputDir, LOCK_FILE};

use crate::compare::{check_variants, fit_variants, psis_loo, waic};
use crate::data::{write_panel_to, CovariateSpec, PanelDataset};
use crate::error::{Error, Result};
use crate::fit::{fit_model, PosteriorSamples};
use crate::inference::{
    conditional_transition_summary, covariate_means, decode_dataset, posterior_predictive, spillover,
    write_decoded_csv, write_transition_csv, DecodedPath,
};
use crate::likelihood::pointwise_loglik;
use crate::model::StateSpace;
use crate::sampler::{write_trace_csv, Diagnostics};

#[derive(Debug, Parser)]
#[command(name = "chmm", version, about = "Coupled hidden Markov models for two interacting diseases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic cohort from the configured true parameters.
    Simulate(CommonArgs),
    /// Fit the model by NUTS and write draws and diagnostics.
    Fit(FitArgs),
    /// Convergence, transition summaries and LOO/WAIC for an earlier fit.
    Diagnose(PostArgs),
    /// Most probable state paths under the posterior mean.
    Decode(PostArgs),
    /// Posterior predictive replicates and interval coverage.
    Ppc(PostArgs),
    /// Treatment spill-over along a two-step path.
    Spillover(PostArgs),
    /// Fit the model variants and compare their predictive accuracy.
    Compare(FitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; `{}` is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Panel CSV replacing the configured data source.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exit with status 5 when a fit has not converged.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub sampling: Option<usize>,
    #[arg(long)]
    pub target_accept: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PostArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory holding the fit artifacts; defaults to the output directory.
    #[arg(long)]
    pub fit_dir: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command_line = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, command_line) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("chmm: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, command_line: Vec<String>) -> Result<()> {
    match command {
        Command::Simulate(a) => {
            let cfg = resolve(&a, None)?;
            Session::open("simulate", cfg, &a, command_line)?.simulate()
        }
        Command::Fit(a) => {
            let cfg = resolve(&a.common, Some(&a))?;
            Session::open("fit", cfg, &a.common, command_line)?.fit()
        }
        Command::Compare(a) => {
            let cfg = resolve(&a.common, Some(&a))?;
            Session::open("compare", cfg, &a.common, command_line)?.compare()
        }
        Command::Diagnose(a) => post("diagnose", a, command_line, Session::diagnose),
        Command::Decode(a) => post("decode", a, command_line, Session::decode),
        Command::Ppc(a) => post("ppc", a, command_line, Session::ppc),
        Command::Spillover(a) => post("spillover", a, command_line, Session::spillover),
    }
}

fn post(
    name: &str,
    args: PostArgs,
    command_line: Vec<String>,
    f: fn(&mut Session, &PosteriorSamples) -> Result<()>,
) -> Result<()> {
    let cfg = resolve(&args.common, None)?;
    let mut session = Session::open(name, cfg, &args.common, command_line)?;
    let fit_dir = args.fit_dir.clone().unwrap_or_else(|| session.out.path().to_path_buf());
    let samples = session.load_fit(&fit_dir)?;
    f(&mut session, &samples)
}

/// Effective configuration: flag, then config file, then default.
fn resolve(common: &CommonArgs, fit: Option<&FitArgs>) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &common.data {
        cfg.data = DataSource::File {
            path: p.clone(),
            schema: CovariateSpec::default(),
        };
    }
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
    }
    cfg.sampler.seed = cfg.effective_seed();
    if common.strict {
        cfg.strict = true;
    }
    if let Some(f) = fit {
        if let Some(v) = f.chains {
            cfg.sampler.n_chains = v;
        }
        if let Some(v) = f.warmup {
            cfg.sampler.n_warmup = v;
        }
        if let Some(v) = f.sampling {
            cfg.sampler.n_sampling = v;
        }
        if let Some(v) = f.target_accept {
            cfg.sampler.target_accept = v;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_root(common: &CommonArgs, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = &common.out {
        return p.clone();
    }
    if let Some(p) = &cfg.output_dir {
        return p.clone();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join("run"),
        None => PathBuf::from("chmm-out"),
    }
}

fn data_hash(data: &PanelDataset) -> Result<String> {
    let mut buf = Vec::new();
    write_panel_to(data, &mut buf)?;
    Ok(sha256_hex(&buf))
}

/// `beta[4,2][treatment]` becomes `beta_4_2_treatment`.
fn file_stem(name: &str) -> String {
    name.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
        .filter(|part| !part.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

struct Session {
    command: String,
    command_line: Vec<String>,
    cfg: RunConfig,
    out: OutputDir,
    identity: Option<FitIdentity>,
    data: Option<PanelDataset>,
    summary: serde_json::Value,
}

impl Session {
    fn open(command: &str, cfg: RunConfig, common: &CommonArgs, command_line: Vec<String>) -> Result<Self> {
        let out = OutputDir::acquire(&output_root(common, &cfg))?;
        Ok(Self {
            command: command.to_string(),
            command_line,
            cfg,
            out,
            identity: None,
            data: None,
            summary: serde_json::Value::Null,
        })
    }

    fn space(&self) -> Result<StateSpace> {
        self.cfg.space()
    }

    /// Model data plus the identity an artifact produced from it carries.
    fn model_data(&mut self) -> Result<PanelDataset> {
        if let Some(d) = &self.data {
            return Ok(d.clone());
        }
        let data = self.cfg.model_data()?;
        self.identity = Some(FitIdentity {
            n_a: self.cfg.model.n_a,
            n_b: self.cfg.model.n_b,
            covariates: data.covariate_names.clone(),
            data_hash: data_hash(&data)?,
        });
        self.data = Some(data.clone());
        Ok(data)
    }

    fn finish(mut self) -> Result<()> {
        self.finish_post()
    }

    fn simulate(mut self) -> Result<()> {
        let DataSource::Simulate(sim_cfg) = self.cfg.data.clone() else {
            return Err(Error::Usage("simulate needs a 'data.simulate' configuration".into()));
        };
        let (raw, sim) = self.cfg.load_raw()?;
        let sim = sim.expect("simulated source");
        let data = self.model_data()?;
        write_panel_to(&raw, self.out.create("data.csv")?)?;
        self.out.write_json("truth.json", &sim_cfg.true_params)?;
        self.out.write_json("simulation.json", &sim_cfg)?;
        let paths: Vec<DecodedPath> = raw
            .patients
            .iter()
            .zip(&sim.states)
            .map(|(p, s)| DecodedPath {
                patient_id: p.id.clone(),
                t: p.t.clone(),
                states: s.clone(),
            })
            .collect();
        let space = sim_cfg.true_params.validate()?;
        write_decoded_csv(self.out.create("states.csv")?, space, &paths)?;
        println!(
            "simulated {} patients, {} observations, covariates {:?}",
            data.n_patients(),
            data.n_rows(),
            data.covariate_names
        );
        self.summary = serde_json::json!({
            "n_patients": data.n_patients(),
            "n_observations": data.n_rows(),
        });
        self.finish()
    }

    fn fit(mut self) -> Result<()> {
        let data = self.model_data()?;
        let space = self.space()?;
        let fit = fit_model(&data, space, &self.cfg.sampler)?;

        fit.samples.write_csv(self.out.create("draws.csv")?)?;
        fit.draws.write_csv(self.out.create("draws_unconstrained.csv")?)?;
        fit.draws.write_stats_csv(self.out.create("sampler_stats.csv")?)?;
        fit.diagnostics.write_csv(self.out.create("diagnostics.csv")?)?;
        self.out.write_json("design.json", &fit.design)?;
        for (name, series) in fit.samples.names().iter().zip(fit.samples.series()) {
            write_trace_csv(self.out.create(&format!("trace/{}.csv", file_stem(name)))?, &series)?;
        }

        let converged = fit.converged();
        println!(
            "{} chains x {} draws, {} divergent ({:.2}%), max R-hat {:.3}, min ESS {:.0}",
            fit.samples.n_chains,
            fit.samples.n_iter,
            fit.n_divergent(),
            100.0 * fit.divergence_rate(),
            fit.diagnostics.max_rhat(),
            fit.diagnostics.min_ess()
        );
        if !converged {
            eprintln!("warning: not converged: {}", fit.diagnostics.failing().join(", "));
        }
        self.summary = serde_json::json!({
            "converged": converged,
            "n_divergent": fit.n_divergent(),
            "max_rhat": fit.diagnostics.max_rhat(),
            "min_ess": fit.diagnostics.min_ess(),
            "failing": fit.diagnostics.failing(),
            "sampler": fit.draws.manifest_json(),
        });
        let strict = self.cfg.strict;
        self.finish()?;
        if strict && !converged {
            return Err(Error::NotConverged(format!(
                "R-hat >= 1.1 for {}",
                fit.diagnostics.failing().join(", ")
            )));
        }
        Ok(())
    }

    /// Reads the fit in `dir` after checking that it was produced from the
    /// same model and data as the current configuration.
    fn load_fit(&mut self, dir: &Path) -> Result<PosteriorSamples> {
        let manifest = read_manifest(dir, "fit")?;
        self.model_data()?;
        let data_identity = self.identity.clone().expect("set by model_data");
        let fitted = manifest
            .identity
            .ok_or_else(|| Error::Refused("fit manifest carries no model identity".into()))?;
        let diverging = fitted.divergent_fields(&data_identity);
        if !diverging.is_empty() {
            return Err(Error::Refused(format!(
                "fit in {} was produced from a different configuration; mismatched: {}",
                dir.display(),
                diverging.join(", ")
            )));
        }
        let file = File::open(dir.join("draws.csv"))
            .map_err(|e| Error::Refused(format!("cannot read draws in {}: {e}", dir.display())))?;
        let samples = PosteriorSamples::read_csv(file, self.space()?, fitted.covariates.clone())?;
        self.summary = serde_json::json!({ "fit_dir": dir, "fit_config_hash": manifest.config_hash });
        Ok(samples)
    }

    fn add_summary(&mut self, key: &str, value: serde_json::Value) {
        if let serde_json::Value::Object(m) = &mut self.summary {
            m.insert(key.to_string(), value);
        }
    }

    fn diagnose(&mut self, samples: &PosteriorSamples) -> Result<()> {
        let data = self.model_data()?;
        let n_div = read_manifest(&self.fit_dir(), "fit")
            .ok()
            .and_then(|m| m.summary.get("n_divergent").and_then(|v| v.as_u64()))
            .unwrap_or(0) as usize;
        let diag: Diagnostics = samples.diagnostics(n_div);
        diag.write_csv(self.out.create("diagnostics.csv")?)?;

        let profile = covariate_means(&data);
        let transitions = conditional_transition_summary(samples.draws(), &profile, None)?;
        write_transition_csv(self.out.create("transitions.csv")?, &transitions)?;

        let pw = pointwise_loglik(samples.draws(), &data)?;
        pw.write_csv(self.out.create("pointwise_loglik.csv")?)?;
        let loo = psis_loo(&pw)?;
        let w = waic(&pw)?;
        self.out.write_json("loo.json", &loo)?;
        self.out.write_json("waic.json", &w)?;

        println!(
            "max R-hat {:.3}, min ESS {:.0}, {} divergent; converged: {}",
            diag.max_rhat(),
            diag.min_ess(),
            n_div,
            diag.converged()
        );
        println!(
            "elpd_loo {:.2} (SE {:.2}), p_loo {:.2}, WAIC {:.2}; Pareto k > 0.7: {}",
            loo.elpd_loo,
            loo.se_elpd_loo,
            loo.p_loo,
            w.waic,
            loo.k_counts.bad + loo.k_counts.very_bad
        );
        for warning in &loo.warnings {
            eprintln!("warning: {warning}");
        }
        self.add_summary("converged", serde_json::json!(diag.converged()));
        self.add_summary("elpd_loo", serde_json::json!(loo.elpd_loo));
        self.add_summary("waic", serde_json::json!(w.waic));
        self.finish_post()?;
        if self.cfg.strict && !diag.converged() {
            return Err(Error::NotConverged(diag.failing().join(", ")));
        }
        Ok(())
    }

    fn decode(&mut self, samples: &PosteriorSamples) -> Result<()> {
        let data = self.model_data()?;
        let mean = samples.posterior_mean();
        let paths = decode_dataset(&mean, &data)?;
        write_decoded_csv(self.out.create("decoded.csv")?, samples.space, &paths)?;
        self.out.write_json("posterior_mean.json", &mean)?;
        let mut occupancy = vec![0usize; samples.space.n_global()];
        for p in &paths {
            for &s in &p.states {
                occupancy[s] += 1;
            }
        }
        println!("decoded {} patients; state occupancy {:?}", paths.len(), occupancy);
        self.add_summary("occupancy", serde_json::json!(occupancy));
        self.finish_post()
    }

    fn ppc(&mut self, samples: &PosteriorSamples) -> Result<()> {
        let data = self.model_data()?;
        let ppc = posterior_predictive(samples.draws(), &data, self.cfg.ppc.n_rep, self.cfg.effective_seed())?;
        ppc.write_intervals_csv(self.out.create("ppc_intervals.csv")?)?;
        self.out.write_json("ppc_coverage.json", &ppc.coverage)?;
        let c = &ppc.coverage;
        println!(
            "coverage over {} observations and {} replicates: 50% {:.3}, 90% {:.3}",
            c.n_observations, c.n_replicates, c.overall.central_50, c.overall.central_90
        );
        self.add_summary("coverage", serde_json::to_value(c)?);
        self.finish_post()
    }

    fn spillover(&mut self, samples: &PosteriorSamples) -> Result<()> {
        let data = self.model_data()?;
        let sc = self.cfg.spillover.clone();
        let profile = sc.profile.clone().unwrap_or_else(|| covariate_means(&data));
        let report = spillover(samples.draws(), &samples.covariate_names, &profile, &sc.spec())?;
        report.write_csv(self.out.create("spillover.csv")?)?;
        self.out.write_json("spillover.json", &report)?;
        print!("{}", report.to_table());
        if let Some(w) = &report.warning {
            eprintln!("warning: {w}");
        }
        self.add_summary("difference_median", serde_json::json!(report.difference[2]));
        self.finish_post()
    }

    fn compare(mut self) -> Result<()> {
        let data = self.model_data()?;
        let spaces = self
            .cfg
            .compare
            .variants
            .iter()
            .map(|&(a, b)| {
                StateSpace::new(a, b).map_err(|e| Error::Usage(format!("config field 'compare.variants': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        check_variants(&spaces)?;
        let (report, _) = fit_variants(&data, &self.cfg.sampler, &spaces)?;
        report.write_csv(self.out.create("compare.csv")?)?;
        let table = report.to_table();
        self.out.write_text("compare.txt", &table)?;
        print!("{table}");
        let all_converged = report.rows.iter().all(|r| r.converged);
        self.summary = serde_json::to_value(&report)?;
        let strict = self.cfg.strict;
        self.finish()?;
        if strict && !all_converged {
            return Err(Error::NotConverged("at least one variant did not converge".into()));
        }
        Ok(())
    }

    fn fit_dir(&self) -> PathBuf {
        self.summary
            .get("fit_dir")
            .and_then(|v| v.as_str())
            .map(PathBuf::from)
            .unwrap_or_else(|| self.out.path().to_path_buf())
    }

    /// Writes the manifest while keeping the session usable for a strict
    /// exit afterwards.
    fn finish_post(&mut self) -> Result<()> {
        let config = serde_json::to_value(&self.cfg)?;
        let manifest = Manifest {
            command: self.command.clone(),
            command_line: self.command_line.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.cfg.effective_seed(),
            config_hash: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
            config,
            identity: self.identity.clone(),
            outputs: self.out.written().to_vec(),
            summary: self.summary.clone(),
        };
        let name = manifest_name(&self.command);
        self.out.write_json(&name, &manifest)?;
        println!("wrote {}", self.out.file(&name).display());
        Ok(())
    }
}
