//! Retained AME draws, their summaries, prediction and simulation.

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ame::design::{AmeSpec, DyadDesign};
use crate::ame::dist::std_normal;
use crate::ame::gibbs::McmcConfig;
use crate::covariates::CovariateSet;
use crate::error::{Error, Result};
use crate::network::DirectedNetwork;
use crate::numeric::{mean, norm_cdf, quantile_sorted, rng_stream, sd, sorted, Rng};

/// Scalar parameters of one retained iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmeDraw {
    pub chain: usize,
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub sigma_a2: f64,
    pub sigma_b2: f64,
    pub sigma_ab: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub term: String,
    pub mean: f64,
    pub sd: f64,
    #[serde(rename = "q2.5")]
    pub q025: f64,
    #[serde(rename = "q97.5")]
    pub q975: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmePosterior {
    pub spec: AmeSpec,
    pub config: McmcConfig,
    pub coefficient_labels: Vec<String>,
    pub node_labels: Vec<String>,
    pub draws: Vec<AmeDraw>,
    /// Per-draw sender effects.
    pub a_draws: Vec<Vec<f64>>,
    pub b_draws: Vec<Vec<f64>>,
    /// Per-draw `n x d` factors; only `U V'` is identified.
    pub u_draws: Vec<DMatrix<f64>>,
    pub v_draws: Vec<DMatrix<f64>>,
    pub chain_lengths: Vec<usize>,
    pub a_mean: Vec<f64>,
    pub b_mean: Vec<f64>,
    /// Posterior mean of `U V'`, row-major `n x n` with zero diagonal.
    pub uv_mean: Vec<f64>,
    pub summaries: Vec<ParamSummary>,
    /// Post-burn-in Metropolis acceptance rate for `rho`, if sampled.
    pub rho_acceptance: Option<f64>,
}

impl AmePosterior {
    pub(crate) fn empty(spec: AmeSpec, config: McmcConfig, coefficient_labels: Vec<String>, node_labels: Vec<String>) -> Self {
        AmePosterior {
            spec,
            config,
            coefficient_labels,
            node_labels,
            draws: Vec::new(),
            a_draws: Vec::new(),
            b_draws: Vec::new(),
            u_draws: Vec::new(),
            v_draws: Vec::new(),
            chain_lengths: Vec::new(),
            a_mean: Vec::new(),
            b_mean: Vec::new(),
            uv_mean: Vec::new(),
            summaries: Vec::new(),
            rho_acceptance: None,
        }
    }

    pub fn n(&self) -> usize {
        self.node_labels.len()
    }

    /// Names of the free scalar parameters, in draw-table order.
    pub fn scalar_names(&self) -> Vec<String> {
        let mut names = self.coefficient_labels.clone();
        if self.spec.include_additive {
            names.extend(["sigma2_a", "sigma2_b", "sigma_ab"].map(String::from));
        }
        if self.spec.include_dyadic_correlation {
            names.push("rho".into());
        }
        names
    }

    pub fn scalar_values(&self, draw: &AmeDraw) -> Vec<f64> {
        let mut v = draw.theta.clone();
        if self.spec.include_additive {
            v.extend([draw.sigma_a2, draw.sigma_b2, draw.sigma_ab]);
        }
        if self.spec.include_dyadic_correlation {
            v.push(draw.rho);
        }
        v
    }

    /// Chain of scalar parameter `k` over all draws, chains concatenated.
    pub fn scalar_chain(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| self.scalar_values(d)[k]).collect()
    }

    pub fn summary(&self, term: &str) -> Option<&ParamSummary> {
        self.summaries.iter().find(|s| s.term == term)
    }

    /// `U V'` of draw `k` at `(i, j)`.
    pub fn uv_at(&self, k: usize, i: usize, j: usize) -> f64 {
        match (self.u_draws.get(k), self.v_draws.get(k)) {
            (Some(u), Some(v)) if u.ncols() > 0 => u.row(i).dot(&v.row(j)),
            _ => 0.0,
        }
    }

    pub(crate) fn finish(&mut self) {
        let n = self.n();
        let m = self.draws.len().max(1) as f64;
        self.a_mean = (0..n).map(|i| self.a_draws.iter().map(|a| a[i]).sum::<f64>() / m).collect();
        self.b_mean = (0..n).map(|i| self.b_draws.iter().map(|b| b[i]).sum::<f64>() / m).collect();
        self.uv_mean = vec![0.0; n * n];
        for (u, v) in self.u_draws.iter().zip(&self.v_draws) {
            if u.ncols() == 0 {
                continue;
            }
            let uv = u * v.transpose();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        self.uv_mean[i * n + j] += uv[(i, j)] / m;
                    }
                }
            }
        }
        self.summaries = self
            .scalar_names()
            .into_iter()
            .enumerate()
            .map(|(k, term)| {
                let chain = self.scalar_chain(k);
                let s = sorted(&chain);
                ParamSummary {
                    term,
                    mean: mean(&chain),
                    sd: sd(&chain),
                    q025: quantile_sorted(&s, 0.025),
                    q975: quantile_sorted(&s, 0.975),
                }
            })
            .collect();
    }

    /// Linear predictor `mu_ij` of draw `k`, row-major `n x n`.
    pub(crate) fn linear_predictor(&self, design: &DyadDesign, k: usize) -> Vec<f64> {
        let n = self.n();
        let draw = &self.draws[k];
        let zeros = vec![0.0; n];
        let a = self.a_draws.get(k).unwrap_or(&zeros);
        let b = self.b_draws.get(k).unwrap_or(&zeros);
        let uv = match (self.u_draws.get(k), self.v_draws.get(k)) {
            (Some(u), Some(v)) if u.ncols() > 0 => Some(u * v.transpose()),
            _ => None,
        };
        let mut mu = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let r = design.row(i, j);
                let xb: f64 = design.x.row(r).iter().zip(&draw.theta).map(|(x, t)| x * t).sum();
                mu[i * n + j] = xb + a[i] + b[j] + uv.as_ref().map_or(0.0, |m| m[(i, j)]);
            }
        }
        mu
    }
}

/// Posterior mean tie probabilities `E[Phi(mu_ij)]`, `n x n` with zero
/// diagonal.
pub fn predict_ame(posterior: &AmePosterior, covariates: &CovariateSet) -> Result<DMatrix<f64>> {
    if posterior.draws.is_empty() {
        return Err(Error::TooFewDraws { got: 0, need: 1 });
    }
    let n = posterior.n();
    let design = DyadDesign::new(&posterior.spec, covariates, n)?;
    let mut p = DMatrix::zeros(n, n);
    for k in 0..posterior.draws.len() {
        let mu = posterior.linear_predictor(&design, k);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    p[(i, j)] += norm_cdf(mu[i * n + j]);
                }
            }
        }
    }
    Ok(p / posterior.draws.len() as f64)
}

/// Draws a network from the AME link given linear predictors `mu` (row-major
/// `n x n`) and pair correlation `rho`.
pub(crate) fn simulate_from_mu(mu: &[f64], n: usize, rho: f64, rng: &mut Rng) -> DirectedNetwork {
    let mut net = DirectedNetwork::with_size(n).expect("n >= 2");
    let c = (1.0 - rho * rho).sqrt();
    for i in 0..n {
        for j in i + 1..n {
            let e1 = std_normal(rng);
            let e2 = rho * e1 + c * std_normal(rng);
            if mu[i * n + j] + e1 > 0.0 {
                net.set_edge(i, j, true);
            }
            if mu[j * n + i] + e2 > 0.0 {
                net.set_edge(j, i, true);
            }
        }
    }
    net
}

/// Posterior predictive networks. Draw `s` uses substream `(seed, s)` to
/// pick a retained iteration uniformly and then simulate from it.
pub fn simulate_posterior(
    posterior: &AmePosterior,
    covariates: &CovariateSet,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<DirectedNetwork>> {
    if posterior.draws.is_empty() {
        return Err(Error::TooFewDraws { got: 0, need: 1 });
    }
    let n = posterior.n();
    let design = DyadDesign::new(&posterior.spec, covariates, n)?;
    let m = posterior.draws.len();
    (0..n_draws)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_stream(seed, s as u64);
            let k = rng.random_range(0..m);
            let mu = posterior.linear_predictor(&design, k);
            let sim = simulate_from_mu(&mu, n, posterior.draws[k].rho, &mut rng);
            let mut net = DirectedNetwork::empty(posterior.node_labels.clone())?;
            for (i, j) in sim.edges() {
                net.set_edge(i, j, true);
            }
            Ok(net)
        })
        .collect()
}

/// True parameter values for simulating from an AME model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AmeParams {
    pub theta: Vec<f64>,
    /// Sender effects; empty means zero.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `n x d` factors; empty (zero columns) for none.
    pub u: Option<DMatrix<f64>>,
    pub v: Option<DMatrix<f64>>,
    pub rho: f64,
}

/// Simulates one network from the AME probit model on `n` nodes.
pub fn simulate_ame(
    spec: &AmeSpec,
    covariates: &CovariateSet,
    n: usize,
    params: &AmeParams,
    seed: u64,
) -> Result<DirectedNetwork> {
    let design = DyadDesign::new(spec, covariates, n)?;
    if params.theta.len() != design.p() {
        return Err(Error::DimensionMismatch { what: "theta".into(), expected: design.p(), got: params.theta.len() });
    }
    if params.rho.abs() >= 1.0 {
        return Err(Error::InvalidConfig("|rho| must be below 1".into()));
    }
    let uv = match (&params.u, &params.v) {
        (Some(u), Some(v)) => Some(u * v.transpose()),
        _ => None,
    };
    let eff = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let mut mu = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let xb: f64 = design.x.row(design.row(i, j)).iter().zip(&params.theta).map(|(x, t)| x * t).sum();
                mu[i * n + j] = xb + eff(&params.a, i) + eff(&params.b, j) + uv.as_ref().map_or(0.0, |m| m[(i, j)]);
            }
        }
    }
    Ok(simulate_from_mu(&mu, n, params.rho, &mut rng_stream(seed, 0)))
}
