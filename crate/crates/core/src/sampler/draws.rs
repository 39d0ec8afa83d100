use std::io::Write;

use serde::{Deserialize, Serialize};

use super::diagnostics::Diagnostics;
use crate::error::{Error, Result};

/// Sampler metadata for one post-warm-up iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterStats {
    pub divergent: bool,
    pub tree_depth: usize,
    pub n_leapfrog: usize,
    pub step_size: f64,
    pub accept_stat: f64,
    pub energy: f64,
    pub logp: f64,
}

/// Result of warm-up for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationSummary {
    pub chain: usize,
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
}

/// Post-warm-up draws in the unconstrained space, `chain x iteration x dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draws {
    pub names: Vec<String>,
    pub n_chains: usize,
    pub n_iter: usize,
    pub dim: usize,
    pub seed: u64,
    values: Vec<f64>,
    pub stats: Vec<Vec<IterStats>>,
    pub adaptation: Vec<AdaptationSummary>,
}

impl Draws {
    pub fn new(
        names: Vec<String>,
        seed: u64,
        chains: Vec<Vec<Vec<f64>>>,
        stats: Vec<Vec<IterStats>>,
        adaptation: Vec<AdaptationSummary>,
    ) -> Result<Self> {
        let n_chains = chains.len();
        let n_iter = chains.first().map_or(0, Vec::len);
        let dim = names.len();
        if chains.iter().any(|c| c.len() != n_iter) || chains.iter().flatten().any(|d| d.len() != dim) {
            return Err(Error::validation("ragged draws"));
        }
        if stats.len() != n_chains || stats.iter().any(|s| s.len() != n_iter) {
            return Err(Error::validation("sampler statistics do not match draws"));
        }
        let values = chains.into_iter().flatten().flatten().collect();
        Ok(Self {
            names,
            n_chains,
            n_iter,
            dim,
            seed,
            values,
            stats,
            adaptation,
        })
    }

    pub fn draw(&self, chain: usize, iter: usize) -> &[f64] {
        let start = (chain * self.n_iter + iter) * self.dim;
        &self.values[start..start + self.dim]
    }

    /// All draws, chains concatenated in order.
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim.max(1)).take(self.n_chains * self.n_iter)
    }

    pub fn n_draws(&self) -> usize {
        self.n_chains * self.n_iter
    }

    /// `chains[c][i]` for coordinate `k`.
    pub fn series(&self, k: usize) -> Vec<Vec<f64>> {
        (0..self.n_chains)
            .map(|c| (0..self.n_iter).map(|i| self.draw(c, i)[k]).collect())
            .collect()
    }

    pub fn n_divergent(&self) -> usize {
        self.stats.iter().flatten().filter(|s| s.divergent).count()
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let series: Vec<_> = (0..self.dim).map(|k| self.series(k)).collect();
        Diagnostics::from_series(self.names.clone(), &series, self.n_divergent())
    }

    /// CSV with header `chain,iter,<names>`; chains and iterations counted
    /// from 1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_draws_csv(writer, &self.names, self.n_chains, self.n_iter, |c, i| {
            self.draw(c, i).to_vec()
        })
    }

    /// CSV with header `chain,iter,divergent,tree_depth,n_leapfrog,step_size,accept_stat,energy,logp`.
    pub fn write_stats_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "chain",
            "iter",
            "divergent",
            "tree_depth",
            "n_leapfrog",
            "step_size",
            "accept_stat",
            "energy",
            "logp",
        ])?;
        for (c, chain) in self.stats.iter().enumerate() {
            for (i, s) in chain.iter().enumerate() {
                w.write_record([
                    (c + 1).to_string(),
                    (i + 1).to_string(),
                    (s.divergent as u8).to_string(),
                    s.tree_depth.to_string(),
                    s.n_leapfrog.to_string(),
                    s.step_size.to_string(),
                    s.accept_stat.to_string(),
                    s.energy.to_string(),
                    s.logp.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Manifest: layout, seed and adaptation summary.
    pub fn manifest_json(&self) -> serde_json::Value {
        serde_json::json!({
            "names": self.names,
            "n_chains": self.n_chains,
            "n_iter": self.n_iter,
            "dim": self.dim,
            "seed": self.seed,
            "n_divergent": self.n_divergent(),
            "adaptation": self.adaptation,
        })
    }
}

/// Shared writer for draw tables: header `chain,iter,<names>`.
pub fn write_draws_csv<W: Write>(
    writer: W,
    names: &[String],
    n_chains: usize,
    n_iter: usize,
    row: impl Fn(usize, usize) -> Vec<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["chain".to_string(), "iter".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for c in 0..n_chains {
        for i in 0..n_iter {
            let mut rec = vec![(c + 1).to_string(), (i + 1).to_string()];
            rec.extend(row(c, i).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Traceplot table for one parameter: header `iter,chain_1,...,chain_C`.
pub fn write_trace_csv<W: Write>(writer: W, series: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["iter".to_string()];
    header.extend((1..=series.len()).map(|c| format!("chain_{c}")));
    w.write_record(&header)?;
    let n = series.first().map_or(0, Vec::len);
    for i in 0..n {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(series.iter().map(|s| s[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
