//! Metropolis single-dyad toggle sampler.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariates::CovariateSet;
use crate::error::{Error, Result};
use crate::network::{dyads, DirectedNetwork};
use crate::numeric::{rng_stream, Rng};
use crate::stats::{BoundModel, CachedNetwork, ModelSpec, TieView};

/// Starting state of every chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitState {
    Observed,
    Empty,
    /// Each dyad present independently with this probability.
    Random(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Toggle attempts discarded at the start of each chain.
    pub burn_in: u64,
    /// Toggle attempts between retained draws.
    pub interval: u64,
    /// Retained draws in total, split evenly across chains.
    pub n_samples: usize,
    pub seed: u64,
    pub init: InitState,
    pub chains: usize,
}

impl SamplerConfig {
    /// `burn_in = 10 n^2`, `interval = n^2`, 1024 draws, one chain.
    pub fn for_size(n: usize, seed: u64) -> Self {
        let n2 = (n * n) as u64;
        SamplerConfig { burn_in: 10 * n2, interval: n2, n_samples: 1024, seed, init: InitState::Observed, chains: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.interval == 0 || self.n_samples == 0 || self.chains == 0 {
            return Err(Error::InvalidConfig("interval, n_samples and chains must be at least 1".into()));
        }
        if self.chains > self.n_samples {
            return Err(Error::InvalidConfig("more chains than retained draws".into()));
        }
        if let InitState::Random(p) = self.init {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("random init probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    fn chain_lengths(&self) -> Vec<usize> {
        let base = self.n_samples / self.chains;
        let extra = self.n_samples % self.chains;
        (0..self.chains).map(|c| base + (c < extra) as usize).collect()
    }
}

/// Draws retained from one or more chains, in chain order.
#[derive(Debug, Clone)]
pub struct SampleRun {
    pub stats: Vec<Vec<f64>>,
    pub densities: Vec<f64>,
    /// Present only when networks were requested.
    pub networks: Option<Vec<DirectedNetwork>>,
    /// Number of retained draws from each chain.
    pub chain_lengths: Vec<usize>,
    pub acceptance_rate: f64,
}

impl SampleRun {
    /// Retained draws of chain `c`.
    pub fn chain_range(&self, c: usize) -> std::ops::Range<usize> {
        let start: usize = self.chain_lengths[..c].iter().sum();
        start..start + self.chain_lengths[c]
    }
}

struct ChainOutput {
    stats: Vec<Vec<f64>>,
    densities: Vec<f64>,
    networks: Vec<DirectedNetwork>,
    accepted: u64,
    attempts: u64,
}

/// One Metropolis chain from `start`.
fn run_chain(
    model: &BoundModel<'_>,
    theta: &[f64],
    start: DirectedNetwork,
    cfg: &SamplerConfig,
    draws: usize,
    keep_networks: bool,
    rng: &mut Rng,
) -> ChainOutput {
    let n = start.n();
    let mut y = CachedNetwork::new(start, model.partner_needs());
    let mut delta = vec![0.0; theta.len()];
    let mut accepted = 0u64;
    let mut attempts = 0u64;
    let mut out = ChainOutput {
        stats: Vec::with_capacity(draws),
        densities: Vec::with_capacity(draws),
        networks: Vec::new(),
        accepted: 0,
        attempts: 0,
    };
    let mut step = |y: &mut CachedNetwork, rng: &mut Rng| {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        model.change(y, i, j, &mut delta);
        let lin: f64 = theta.iter().zip(&delta).map(|(t, d)| t * d).sum();
        let log_ratio = if y.tie(i, j) { -lin } else { lin };
        attempts += 1;
        if log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp() {
            y.toggle(i, j);
            accepted += 1;
        }
    };
    for _ in 0..cfg.burn_in {
        step(&mut y, rng);
    }
    for _ in 0..draws {
        for _ in 0..cfg.interval {
            step(&mut y, rng);
        }
        out.stats.push(model.eval(&y));
        out.densities.push(y.network().density());
        if keep_networks {
            out.networks.push(y.network().clone());
        }
    }
    out.accepted = accepted;
    out.attempts = attempts;
    out
}

fn initial_network(cfg: &SamplerConfig, n: usize, observed: Option<&DirectedNetwork>, rng: &mut Rng) -> Result<DirectedNetwork> {
    let mut net = match observed {
        Some(obs) => obs.clone(),
        None => DirectedNetwork::with_size(n)?,
    };
    match cfg.init {
        InitState::Observed => {
            if observed.is_none() {
                return Err(Error::InvalidConfig("init = observed requires an observed network".into()));
            }
        }
        InitState::Empty => net.clear(),
        InitState::Random(p) => {
            for d in dyads(n) {
                net.set_edge(d.i, d.j, rng.random_bool(p));
            }
        }
    }
    Ok(net)
}

pub(crate) fn run(
    model: &BoundModel<'_>,
    theta: &[f64],
    cfg: &SamplerConfig,
    observed: Option<&DirectedNetwork>,
    keep_networks: bool,
) -> Result<SampleRun> {
    cfg.validate()?;
    let n = model.n();
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch { what: "theta".into(), expected: model.dim(), got: theta.len() });
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("theta".into()));
    }
    if let Some(obs) = observed {
        if obs.n() != n {
            return Err(Error::DimensionMismatch { what: "observed network".into(), expected: n, got: obs.n() });
        }
    }
    let lengths = cfg.chain_lengths();
    let outputs: Vec<ChainOutput> = lengths
        .par_iter()
        .enumerate()
        .map(|(c, &draws)| {
            let mut rng = rng_stream(cfg.seed, c as u64);
            let start = initial_network(cfg, n, observed, &mut rng)?;
            Ok(run_chain(model, theta, start, cfg, draws, keep_networks, &mut rng))
        })
        .collect::<Result<_>>()?;
    let mut run = SampleRun {
        stats: Vec::with_capacity(cfg.n_samples),
        densities: Vec::with_capacity(cfg.n_samples),
        networks: keep_networks.then(Vec::new),
        chain_lengths: lengths,
        acceptance_rate: 0.0,
    };
    let (mut acc, mut att) = (0u64, 0u64);
    for out in outputs {
        run.stats.extend(out.stats);
        run.densities.extend(out.densities);
        if let Some(nets) = run.networks.as_mut() {
            nets.extend(out.networks);
        }
        acc += out.accepted;
        att += out.attempts;
    }
    run.acceptance_rate = if att == 0 { 0.0 } else { acc as f64 / att as f64 };
    Ok(run)
}

/// Samples networks from the ERGM with parameter `theta`. The node count is
/// taken from `covariates`; `observed` supplies labels and the starting
/// state for [`InitState::Observed`].
pub fn sample_networks(
    spec: &ModelSpec,
    covariates: &CovariateSet,
    theta: &[f64],
    config: &SamplerConfig,
    observed: Option<&DirectedNetwork>,
) -> Result<SampleRun> {
    let model = BoundModel::new(spec, covariates, covariates.n())?;
    run(&model, theta, config, observed, true)
}

/// Like [`sample_networks`] but keeps only the statistics and densities.
pub fn sample_stats(
    spec: &ModelSpec,
    covariates: &CovariateSet,
    theta: &[f64],
    config: &SamplerConfig,
    observed: Option<&DirectedNetwork>,
) -> Result<SampleRun> {
    let model = BoundModel::new(spec, covariates, covariates.n())?;
    run(&model, theta, config, observed, false)
}
