//! Simulation check for near-degenerate fitted models.

use serde::{Deserialize, Serialize};

use crate::covariates::CovariateSet;
use crate::ergm::sampler::{run, SampleRun, SamplerConfig};
use crate::ergm::ErgmFit;
use crate::error::Result;
use crate::network::DirectedNetwork;
use crate::numeric::{mean, quantile_sorted, sorted};
use crate::stats::{eval_stats, BoundModel, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Absorption {
    Empty,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermBand {
    pub term: String,
    pub observed: f64,
    pub simulated_mean: f64,
    /// 0.5% quantile of the simulated values.
    pub lower: f64,
    /// 99.5% quantile of the simulated values.
    pub upper: f64,
    pub outside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub terms: Vec<TermBand>,
    pub absorption: Option<Absorption>,
    pub mean_density: f64,
    pub n_sim: usize,
}

impl DegeneracyReport {
    pub fn flagged(&self) -> bool {
        self.absorption.is_some() || self.terms.iter().any(|t| t.outside)
    }
}

/// Density below 0.01 (above 0.99) in at least 90% of the draws in the
/// second half of some chain counts as absorption at the empty (full) graph.
fn absorption(run: &SampleRun) -> Option<Absorption> {
    for c in 0..run.chain_lengths.len() {
        let range = run.chain_range(c);
        let half = &run.densities[range.start + range.len() / 2..range.end];
        if half.is_empty() {
            continue;
        }
        let share = |f: &dyn Fn(f64) -> bool| half.iter().filter(|&&d| f(d)).count() as f64 / half.len() as f64;
        if share(&|d| d < 0.01) >= 0.9 {
            return Some(Absorption::Empty);
        }
        if share(&|d| d > 0.99) >= 0.9 {
            return Some(Absorption::Full);
        }
    }
    None
}

pub(crate) fn report_from_run(spec: &ModelSpec, observed: &[f64], run: &SampleRun) -> DegeneracyReport {
    let terms = spec
        .labels()
        .into_iter()
        .enumerate()
        .map(|(q, term)| {
            let col: Vec<f64> = run.stats.iter().map(|s| s[q]).collect();
            let sv = sorted(&col);
            let lower = quantile_sorted(&sv, 0.005);
            let upper = quantile_sorted(&sv, 0.995);
            TermBand {
                term,
                observed: observed[q],
                simulated_mean: mean(&col),
                lower,
                upper,
                outside: observed[q] < lower || observed[q] > upper,
            }
        })
        .collect();
    DegeneracyReport { terms, absorption: absorption(run), mean_density: mean(&run.densities), n_sim: run.stats.len() }
}

/// Simulates at `theta` and compares with the observed statistics.
pub fn degeneracy_at(
    theta: &[f64],
    spec: &ModelSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    config: &SamplerConfig,
) -> Result<DegeneracyReport> {
    let model = BoundModel::new(spec, covariates, network.n())?;
    let observed = eval_stats(spec, network, covariates)?;
    let draws = run(&model, theta, config, Some(network), false)?;
    Ok(report_from_run(spec, &observed, &draws))
}

/// [`degeneracy_at`] the fitted coefficients.
pub fn degeneracy_check(
    fit: &ErgmFit,
    spec: &ModelSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    config: &SamplerConfig,
) -> Result<DegeneracyReport> {
    degeneracy_at(&fit.theta_hat, spec, network, covariates, config)
}
