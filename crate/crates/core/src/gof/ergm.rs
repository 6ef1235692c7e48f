//! Simulation-based goodness of fit for ERGMs.

use serde::{Deserialize, Serialize};

use crate::covariates::CovariateSet;
use crate::ergm::{sample_networks, ErgmFit, InitState, SamplerConfig};
use crate::error::{Error, Result};
use crate::gof::bands::{share_inside, GofBin};
use crate::network::DirectedNetwork;
use crate::stats::{degree_distributions, esp_distribution, eval_stats, EspVariant, ModelSpec, TermKind};

pub const MIN_SIMULATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    /// Families `idegree`, `odegree`, `esp.<variant>` and `model`, in that
    /// order. Degree and partner bins are counts; trailing bins that are
    /// zero in the observed and every simulated network are dropped.
    pub bins: Vec<GofBin>,
    pub esp_variants: Vec<EspVariant>,
    pub n_simulations: usize,
}

impl GofReport {
    pub fn flagged(&self) -> Vec<&GofBin> {
        self.bins.iter().filter(|b| b.outside).collect()
    }

    pub fn share_inside(&self) -> f64 {
        share_inside(&self.bins)
    }

    pub fn family(&self, family: &str) -> impl Iterator<Item = &GofBin> {
        let family = family.to_string();
        self.bins.iter().filter(move |b| b.family == family)
    }
}

/// Shared-partner variants used by the model's GWESP terms, else `Otp`.
pub fn gof_esp_variants(spec: &ModelSpec) -> Vec<EspVariant> {
    let mut v: Vec<EspVariant> = Vec::new();
    for t in spec.terms() {
        if let TermKind::GwEsp { variant, .. } = t.kind {
            if !v.contains(&variant) {
                v.push(variant);
            }
        }
    }
    if v.is_empty() {
        v.push(EspVariant::Otp);
    }
    v
}

fn histogram_bins(family: &str, observed: &[u64], simulated: &[Vec<u64>], out: &mut Vec<GofBin>) {
    let last = observed
        .iter()
        .rposition(|&c| c > 0)
        .into_iter()
        .chain(simulated.iter().filter_map(|h| h.iter().rposition(|&c| c > 0)))
        .max()
        .unwrap_or(0);
    for k in 0..=last {
        let sims: Vec<f64> = simulated.iter().map(|h| h[k] as f64).collect();
        out.push(GofBin::new(family, k.to_string(), observed[k] as f64, &sims));
    }
}

/// GOF at `theta`, simulating with `sampler` (its `n_samples` is the number
/// of simulated networks).
pub fn gof_ergm_at(
    theta: &[f64],
    spec: &ModelSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    sampler: &SamplerConfig,
) -> Result<GofReport> {
    if sampler.n_samples < MIN_SIMULATIONS {
        return Err(Error::InvalidConfig(format!(
            "goodness of fit needs at least {MIN_SIMULATIONS} simulations, got {}",
            sampler.n_samples
        )));
    }
    let mut cov = covariates.clone();
    if cov.n() != network.n() {
        // only possible for covariate-free models
        cov = CovariateSet::new(network.n());
    }
    let run = sample_networks(spec, &cov, theta, sampler, Some(network))?;
    let nets = run.networks.as_deref().unwrap_or_default();
    let variants = gof_esp_variants(spec);
    let mut bins = Vec::new();

    let (obs_in, obs_out) = degree_distributions(network);
    let (sim_in, sim_out): (Vec<_>, Vec<_>) = nets.iter().map(degree_distributions).unzip();
    histogram_bins("idegree", &obs_in, &sim_in, &mut bins);
    histogram_bins("odegree", &obs_out, &sim_out, &mut bins);
    for &v in &variants {
        let sims: Vec<Vec<u64>> = nets.iter().map(|g| esp_distribution(g, v)).collect();
        histogram_bins(&format!("esp.{}", v.name()), &esp_distribution(network, v), &sims, &mut bins);
    }
    let observed = eval_stats(spec, network, &cov)?;
    for (q, label) in spec.labels().into_iter().enumerate() {
        let sims: Vec<f64> = run.stats.iter().map(|s| s[q]).collect();
        bins.push(GofBin::new("model", label, observed[q], &sims));
    }
    Ok(GofReport { bins, esp_variants: variants, n_simulations: nets.len() })
}

/// GOF of a fitted ERGM: `n_sim` networks simulated at the estimate.
pub fn gof_ergm(
    fit: &ErgmFit,
    spec: &ModelSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    n_sim: usize,
    seed: u64,
) -> Result<GofReport> {
    let sampler = SamplerConfig { n_samples: n_sim, init: InitState::Observed, ..SamplerConfig::for_size(network.n(), seed) };
    gof_ergm_at(&fit.theta_hat, spec, network, covariates, &sampler)
}
