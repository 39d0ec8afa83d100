//! No-U-Turn Hamiltonian Monte Carlo with warm-up adaptation, parallel
//! chains and convergence diagnostics.

mod adapt;
mod diagnostics;
mod draws;
mod init;
mod nuts;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adapt::{DualAveraging, WindowedAdaptation};
pub use diagnostics::{compute_ess, compute_rhat, Diagnostics, RHAT_THRESHOLD};
pub use draws::{write_draws_csv, write_trace_csv, AdaptationSummary, Draws, IterStats};
pub use init::{initial_parameters, initialize_chains, MAX_INIT_ATTEMPTS};
pub use nuts::{leapfrog_energies, TransitionStats, MAX_DELTA_H};

use crate::error::{Error, Result};
use nuts::{Nuts, Point};

/// A differentiable log density on `R^dim`.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Returns `log p(position)` and writes its gradient into `grad`.
    /// Points outside the support, or where evaluation fails, return
    /// negative infinity; `grad` is then unspecified.
    fn logp_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64;

    fn param_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("theta[{}]", i + 1)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub n_chains: usize,
    pub n_warmup: usize,
    pub n_sampling: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_chains: 4,
            n_warmup: 1500,
            n_sampling: 1500,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed: 1,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_chains", self.n_chains),
            ("n_warmup", self.n_warmup),
            ("n_sampling", self.n_sampling),
            ("max_tree_depth", self.max_tree_depth),
        ] {
            if v < 1 {
                return Err(Error::validation(format!("sampler.{name} must be >= 1")));
            }
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::validation(format!(
                "sampler.target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        Ok(())
    }
}

/// Private random stream `stream` under `seed`. Sampler chains use their
/// index; other consumers use disjoint offsets.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) const INIT_STREAM_OFFSET: u64 = 1 << 32;

/// Runs `config.n_chains` chains in parallel from random initial points
/// drawn uniformly from `(-2, 2)^dim`, retrying each up to
/// [`MAX_INIT_ATTEMPTS`] times until the density is finite.
pub fn nuts_sample<T: LogDensity + ?Sized>(target: &T, config: &ChainConfig) -> Result<Draws> {
    config.validate()?;
    let dim = target.dim();
    let inits = (0..config.n_chains)
        .map(|c| {
            let mut rng = stream_rng(config.seed, INIT_STREAM_OFFSET + c as u64);
            let mut grad = vec![0.0; dim];
            let mut tried = Vec::new();
            for _ in 0..MAX_INIT_ATTEMPTS {
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                if target.logp_and_grad(&q, &mut grad).is_finite() {
                    return Ok(q);
                }
                tried.push(q);
            }
            Err(init_failure(c, &tried))
        })
        .collect::<Result<Vec<_>>>()?;
    nuts_sample_from(target, config, &inits)
}

pub(crate) fn init_failure(chain: usize, tried: &[Vec<f64>]) -> Error {
    let shown: Vec<String> = tried
        .iter()
        .take(3)
        .map(|q| {
            let head: Vec<String> = q.iter().take(6).map(|v| format!("{v:.3}")).collect();
            let more = if q.len() > 6 { ", ..." } else { "" };
            format!("[{}{more}]", head.join(", "))
        })
        .collect();
    Error::Initialization(format!(
        "chain {}: log density not finite at {} tried points, e.g. {}",
        chain + 1,
        tried.len(),
        shown.join(" ")
    ))
}

/// Runs one chain per entry of `inits`, in parallel.
pub fn nuts_sample_from<T: LogDensity + ?Sized>(
    target: &T,
    config: &ChainConfig,
    inits: &[Vec<f64>],
) -> Result<Draws> {
    config.validate()?;
    if inits.len() != config.n_chains {
        return Err(Error::validation(format!(
            "{} initial points for {} chains",
            inits.len(),
            config.n_chains
        )));
    }
    let dim = target.dim();
    if let Some(bad) = inits.iter().position(|q| q.len() != dim) {
        return Err(Error::validation(format!(
            "initial point {} has length {}, expected {dim}",
            bad + 1,
            inits[bad].len()
        )));
    }
    let results = inits
        .par_iter()
        .enumerate()
        .map(|(c, q)| run_chain(target, config, c, q.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut chains = Vec::with_capacity(results.len());
    let mut stats = Vec::with_capacity(results.len());
    let mut adaptation = Vec::with_capacity(results.len());
    for (draws, st, ad) in results {
        chains.push(draws);
        stats.push(st);
        adaptation.push(ad);
    }
    Draws::new(target.param_names(), config.seed, chains, stats, adaptation)
}

type ChainOutput = (Vec<Vec<f64>>, Vec<IterStats>, AdaptationSummary);

fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    config: &ChainConfig,
    chain: usize,
    init: Vec<f64>,
) -> Result<ChainOutput> {
    let dim = target.dim();
    let mut z = Point::new(target, init);
    if !z.logp.is_finite() || z.grad.iter().any(|g| !g.is_finite()) {
        return Err(init_failure(chain, &[z.q]));
    }
    let mut nuts = Nuts {
        target,
        inv_metric: vec![1.0; dim],
        step_size: 1.0,
        max_depth: config.max_tree_depth,
        rng: stream_rng(config.seed, chain as u64),
    };
    nuts.init_step_size(&z);
    let mut step_adapt = DualAveraging::new(config.target_accept);
    step_adapt.restart(nuts.step_size);
    let mut metric_adapt = WindowedAdaptation::new(dim, config.n_warmup);

    for _ in 0..config.n_warmup {
        let (next, st) = nuts.transition(&z);
        z = next;
        nuts.step_size = step_adapt.update(st.accept_stat);
        if let Some(var) = metric_adapt.learn(&z.q) {
            nuts.inv_metric = var;
            nuts.init_step_size(&z);
            step_adapt.restart(nuts.step_size);
        }
    }
    nuts.step_size = step_adapt.final_step_size();
    if !(nuts.step_size.is_finite() && nuts.step_size > 0.0) {
        return Err(Error::numeric(format!(
            "chain {}: step-size adaptation produced {}",
            chain + 1,
            nuts.step_size
        )));
    }

    let mut draws = Vec::with_capacity(config.n_sampling);
    let mut stats = Vec::with_capacity(config.n_sampling);
    for _ in 0..config.n_sampling {
        let (next, st) = nuts.transition(&z);
        z = next;
        stats.push(IterStats {
            divergent: st.divergent,
            tree_depth: st.tree_depth,
            n_leapfrog: st.n_leapfrog,
            step_size: nuts.step_size,
            accept_stat: st.accept_stat,
            energy: st.energy,
            logp: z.logp,
        });
        draws.push(z.q.clone());
    }
    Ok((
        draws,
        stats,
        AdaptationSummary {
            chain: chain + 1,
            step_size: nuts.step_size,
            inv_metric: nuts.inv_metric.clone(),
        },
    ))
}
