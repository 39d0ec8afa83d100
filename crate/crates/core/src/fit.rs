//! End-to-end fitting: covariate design, initialization, sampling and the
//! reported posterior.

use std::io::{Read, Write};

use crate::data::PanelDataset;
use crate::error::{Error, Result};
use crate::likelihood::LogPosterior;
use crate::model::{Parameters, StateSpace};
use crate::sampler::{
    initialize_chains, nuts_sample_from, write_draws_csv, ChainConfig, Diagnostics, Draws,
};
use crate::transforms::{constrain, flatten_reported, unflatten_reported, CovariateDesign, ParamLayout};

/// Posterior draws in reported form: coefficients act on the raw
/// covariates, exactly as in the generative model. Stored chain-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub space: StateSpace,
    pub covariate_names: Vec<String>,
    pub n_chains: usize,
    pub n_iter: usize,
    draws: Vec<Parameters>,
}

impl PosteriorSamples {
    pub fn new(
        space: StateSpace,
        covariate_names: Vec<String>,
        n_chains: usize,
        n_iter: usize,
        draws: Vec<Parameters>,
    ) -> Result<Self> {
        if draws.len() != n_chains * n_iter || draws.is_empty() {
            return Err(Error::validation(format!(
                "{} draws do not fill {n_chains} chains x {n_iter} iterations",
                draws.len()
            )));
        }
        let p = covariate_names.len();
        for d in &draws {
            let s = d.validate()?;
            if s != space || d.n_covariates() != p {
                return Err(Error::validation("draw shape does not match the sample layout"));
            }
        }
        Ok(Self {
            space,
            covariate_names,
            n_chains,
            n_iter,
            draws,
        })
    }

    /// A one-draw posterior, e.g. a point estimate or the simulation truth.
    pub fn point(params: Parameters, covariate_names: Vec<String>) -> Result<Self> {
        let space = params.validate()?;
        Self::new(space, covariate_names, 1, 1, vec![params])
    }

    pub fn draws(&self) -> &[Parameters] {
        &self.draws
    }

    pub fn draw(&self, chain: usize, iter: usize) -> &Parameters {
        &self.draws[chain * self.n_iter + iter]
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self.space, self.covariate_names.len())
    }

    pub fn names(&self) -> Vec<String> {
        self.layout().reported_names(&self.covariate_names)
    }

    /// `chains[c][i]` for every reported quantity.
    pub fn series(&self) -> Vec<Vec<Vec<f64>>> {
        let flat: Vec<Vec<f64>> = self.draws.iter().map(flatten_reported).collect();
        let dim = flat[0].len();
        (0..dim)
            .map(|k| {
                (0..self.n_chains)
                    .map(|c| (0..self.n_iter).map(|i| flat[c * self.n_iter + i][k]).collect())
                    .collect()
            })
            .collect()
    }

    pub fn diagnostics(&self, n_divergent: usize) -> Diagnostics {
        Diagnostics::from_series(self.names(), &self.series(), n_divergent)
    }

    /// Componentwise posterior mean. Ordering and the simplex are closed
    /// under averaging, so the result is a valid parameter set.
    pub fn posterior_mean(&self) -> Parameters {
        let n = self.draws.len() as f64;
        let flat: Vec<Vec<f64>> = self.draws.iter().map(flatten_reported).collect();
        let mean: Vec<f64> = (0..flat[0].len())
            .map(|k| flat.iter().map(|f| f[k]).sum::<f64>() / n)
            .collect();
        let mut params = unflatten_reported(&mean, &self.layout()).expect("layout matches");
        let total: f64 = params.pi.iter().sum();
        params.pi.iter_mut().for_each(|p| *p /= total);
        params
    }

    /// CSV with header `chain,iter,<reported names>`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_draws_csv(writer, &self.names(), self.n_chains, self.n_iter, |c, i| {
            flatten_reported(self.draw(c, i))
        })
    }

    /// Reads the output of [`write_csv`](Self::write_csv); the header must
    /// match the layout implied by `space` and `covariate_names`.
    pub fn read_csv<R: Read>(reader: R, space: StateSpace, covariate_names: Vec<String>) -> Result<Self> {
        let layout = ParamLayout::new(space, covariate_names.len());
        let names = layout.reported_names(&covariate_names);
        let mut rdr = csv::Reader::from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut expected = vec!["chain".to_string(), "iter".to_string()];
        expected.extend(names.iter().cloned());
        if header != expected {
            let first_diff = header
                .iter()
                .zip(&expected)
                .position(|(a, b)| a != b)
                .unwrap_or(header.len().min(expected.len()));
            return Err(Error::Refused(format!(
                "draws header does not match the model: column {} is {:?}, expected {:?}",
                first_diff + 1,
                header.get(first_diff),
                expected.get(first_diff)
            )));
        }
        let mut draws = Vec::new();
        let mut n_chains = 0;
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Load(format!("draws row {}: cannot parse '{s}'", row + 2)))
            };
            let chain = parse(&rec[0])? as usize;
            n_chains = n_chains.max(chain);
            let values = rec.iter().skip(2).map(parse).collect::<Result<Vec<f64>>>()?;
            draws.push(unflatten_reported(&values, &layout)?);
        }
        if n_chains == 0 {
            return Err(Error::Load("draws file is empty".into()));
        }
        let n_iter = draws.len() / n_chains;
        Self::new(space, covariate_names, n_chains, n_iter, draws)
    }
}

/// A completed fit.
#[derive(Debug, Clone)]
pub struct Fit {
    /// Reported draws on the raw covariate scale.
    pub samples: PosteriorSamples,
    /// Raw sampler output: unconstrained draws on the rotated design.
    pub draws: Draws,
    pub design: CovariateDesign,
    /// Convergence of the reported quantities.
    pub diagnostics: Diagnostics,
    pub config: ChainConfig,
}

impl Fit {
    pub fn converged(&self) -> bool {
        self.diagnostics.converged()
    }

    pub fn n_divergent(&self) -> usize {
        self.draws.n_divergent()
    }

    pub fn divergence_rate(&self) -> f64 {
        self.n_divergent() as f64 / self.draws.n_draws() as f64
    }
}

/// Fits the model with `space` to `data`, using every covariate column.
///
/// Covariates are centered at their grand means and rotated by a thin QR
/// decomposition before sampling; reported draws are mapped back.
pub fn fit_model(data: &PanelDataset, space: StateSpace, config: &ChainConfig) -> Result<Fit> {
    config.validate()?;
    data.validate()?;
    let design = CovariateDesign::from_data(data)?;
    let rotated = design.rotate_dataset(data)?;
    let layout = ParamLayout::new(space, data.n_covariates());
    let target = LogPosterior::new(layout, rotated)?;
    let inits = initialize_chains(&target, config)?;
    let draws = nuts_sample_from(&target, config, &inits)?;

    let reported = draws
        .iter()
        .map(|theta| constrain(theta, &layout).map(|(p, _)| design.to_reported(&p)))
        .collect::<Result<Vec<_>>>()?;
    let samples = PosteriorSamples::new(
        space,
        data.covariate_names.clone(),
        draws.n_chains,
        draws.n_iter,
        reported,
    )?;
    let diagnostics = samples.diagnostics(draws.n_divergent());
    Ok(Fit {
        samples,
        draws,
        design,
        diagnostics,
        config: config.clone(),
    })
}
