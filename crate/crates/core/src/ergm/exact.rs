//! Exact ERGM computations by summing over every network on a few nodes.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::covariates::CovariateSet;
use crate::error::{Error, Result};
use crate::network::{dyads, DirectedNetwork};
use crate::numeric::logsumexp;
use crate::stats::{eval_stats, ModelSpec, StatVector};

/// Largest supported number of ordered dyads (2^20 networks).
pub const MAX_EXACT_DYADS: usize = 20;

/// Network whose dyad `k` (in row-major order) is set when bit `k` of `code` is.
pub fn network_from_code(n: usize, code: u64) -> Result<DirectedNetwork> {
    let mut net = DirectedNetwork::with_size(n)?;
    for (k, d) in dyads(n).enumerate() {
        if code >> k & 1 == 1 {
            net.set_edge(d.i, d.j, true);
        }
    }
    Ok(net)
}

/// Inverse of [`network_from_code`].
pub fn network_code(net: &DirectedNetwork) -> u64 {
    dyads(net.n()).enumerate().filter(|(_, d)| net.edge(d.i, d.j)).map(|(k, _)| 1u64 << k).sum()
}

/// The distribution of `s(Y)` over all networks on `n` nodes: distinct
/// statistic vectors with their multiplicities.
#[derive(Debug, Clone)]
pub struct ExactSupport {
    n: usize,
    points: Vec<(Vec<f64>, f64)>,
    /// Index into `points` for every network code.
    code_to_point: Vec<u32>,
}

impl ExactSupport {
    pub fn new(spec: &ModelSpec, covariates: &CovariateSet, n: usize) -> Result<Self> {
        let m = n * n.saturating_sub(1);
        if m > MAX_EXACT_DYADS {
            return Err(Error::TooLarge { what: "exact enumeration", n, limit: 5 });
        }
        let mut index: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut points: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut code_to_point = Vec::with_capacity(1 << m);
        for code in 0..1u64 << m {
            let s = eval_stats(spec, &network_from_code(n, code)?, covariates)?.0;
            let key: Vec<u64> = s.iter().map(|v| v.to_bits()).collect();
            let id = *index.entry(key).or_insert_with(|| {
                points.push((s, 0.0));
                (points.len() - 1) as u32
            });
            points[id as usize].1 += 1.0;
            code_to_point.push(id);
        }
        Ok(ExactSupport { n, points, code_to_point })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn log_weights(&self, theta: &[f64]) -> Vec<f64> {
        self.points.iter().map(|(s, c)| c.ln() + dot(theta, s)).collect()
    }

    /// `log kappa(theta)`.
    pub fn log_kappa(&self, theta: &[f64]) -> f64 {
        logsumexp(self.log_weights(theta))
    }

    /// `E_theta[s(Y)]` and `Cov_theta[s(Y)]`.
    pub fn moments(&self, theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let p = theta.len();
        let lw = self.log_weights(theta);
        let lk = logsumexp(lw.iter().copied());
        let mut mu = DVector::zeros(p);
        let mut second = DMatrix::zeros(p, p);
        for ((s, _), l) in self.points.iter().zip(&lw) {
            let w = (l - lk).exp();
            let sv = DVector::from_column_slice(s);
            mu += &sv * w;
            second += &sv * sv.transpose() * w;
        }
        let cov = second - &mu * mu.transpose();
        (mu, cov)
    }

    /// `log P_theta(Y = y)` for a network with statistics `s_obs`.
    pub fn log_lik(&self, theta: &[f64], s_obs: &[f64]) -> f64 {
        dot(theta, s_obs) - self.log_kappa(theta)
    }

    /// Probability of every network, indexed by [`network_code`].
    pub fn probabilities(&self, theta: &[f64]) -> Vec<f64> {
        let lk = self.log_kappa(theta);
        let per_point: Vec<f64> = self.points.iter().map(|(s, _)| (dot(theta, s) - lk).exp()).collect();
        self.code_to_point.iter().map(|&id| per_point[id as usize]).collect()
    }

    /// Exact MLE by Newton's method on the concave log-likelihood. Fails
    /// when the MLE does not exist (observed statistics on the boundary of
    /// the support's convex hull) or the Fisher information is singular.
    pub fn mle(&self, s_obs: &[f64]) -> Result<Vec<f64>> {
        let p = s_obs.len();
        let mut theta = DVector::zeros(p);
        let obs = DVector::from_column_slice(s_obs);
        for it in 0..200 {
            let (mu, cov) = self.moments(theta.as_slice());
            let grad = &obs - &mu;
            let chol = cov.cholesky().ok_or(Error::Separation { iterations: it })?;
            let mut step = chol.solve(&grad);
            // a vanishing gradient alone is not enough: it also vanishes
            // along a direction of divergence, where Newton steps stay large
            if step.amax() < 1e-10 {
                return Ok(theta.iter().copied().collect());
            }
            // keep steps modest so a missing MLE shows up as divergence
            let big = step.amax();
            if big > 2.0 {
                step *= 2.0 / big;
            }
            theta += step;
            if theta.amax() > 50.0 {
                return Err(Error::Separation { iterations: it });
            }
        }
        Err(Error::Separation { iterations: 200 })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of [`enumerate_exact`].
#[derive(Debug, Clone)]
pub struct ExactResult {
    pub log_kappa: f64,
    pub expected_stats: StatVector,
    /// Indexed by [`network_code`]; present when requested.
    pub probabilities: Option<Vec<f64>>,
}

/// Sums over all `2^{n(n-1)}` networks on `n <= 5` nodes.
pub fn enumerate_exact(
    spec: &ModelSpec,
    covariates: &CovariateSet,
    theta: &[f64],
    n: usize,
    with_probabilities: bool,
) -> Result<ExactResult> {
    if theta.len() != spec.len() {
        return Err(Error::DimensionMismatch { what: "theta".into(), expected: spec.len(), got: theta.len() });
    }
    let support = ExactSupport::new(spec, covariates, n)?;
    let (mu, _) = support.moments(theta);
    Ok(ExactResult {
        log_kappa: support.log_kappa(theta),
        expected_stats: StatVector(mu.iter().copied().collect()),
        probabilities: with_probabilities.then(|| support.probabilities(theta)),
    })
}
