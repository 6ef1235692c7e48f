//! ERGM log-likelihood: exact, analytic, or by path sampling.

use serde::{Deserialize, Serialize};

use crate::covariates::CovariateSet;
use crate::ergm::exact::{ExactSupport, MAX_EXACT_DYADS};
use crate::ergm::mple::{fit_mple, mple_design};
use crate::ergm::sampler::{run, InitState, SamplerConfig};
use crate::error::Result;
use crate::network::DirectedNetwork;
use crate::numeric::{derive_seed, effective_sample_size, log1p_exp, logsumexp, mean};
use crate::stats::{eval_stats, BoundModel, ModelSpec, TermKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogLikMethod {
    /// Summation over every network.
    Exact,
    /// Closed form for models whose dyad pairs are independent.
    Analytic,
    /// Thermodynamic integration from the dyad-pair independence model.
    PathSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLik {
    pub value: f64,
    /// Monte-Carlo standard error; zero for exact and analytic values.
    pub mc_se: f64,
    pub method: LogLikMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub points: usize,
    pub draws: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { points: 20, draws: 1000 }
    }
}

fn pair_term(kind: &TermKind) -> bool {
    kind.is_dyad_independent() || matches!(kind, TermKind::Mutual)
}

/// `log kappa(theta)` when every term with a nonzero coefficient is either
/// dyad independent or `mutual`: the model factorises over unordered pairs.
fn pair_log_kappa(spec: &ModelSpec, covariates: &CovariateSet, n: usize, theta: &[f64]) -> Result<Option<f64>> {
    let mut mutual = 0.0;
    let mut keep = vec![false; spec.len()];
    for (q, t) in spec.terms().iter().enumerate() {
        match t.kind {
            TermKind::Mutual => mutual = theta[q],
            ref k if k.is_dyad_independent() => keep[q] = true,
            _ if theta[q] == 0.0 => {}
            _ => return Ok(None),
        }
    }
    let model = BoundModel::new(spec, covariates, n)?;
    let empty = DirectedNetwork::with_size(n)?;
    let mut delta = vec![0.0; spec.len()];
    let mut lin = |i: usize, j: usize| {
        model.change(&empty, i, j, &mut delta);
        (0..delta.len()).filter(|&q| keep[q]).map(|q| theta[q] * delta[q]).sum::<f64>()
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let a = lin(i, j);
            let b = lin(j, i);
            total += logsumexp([0.0, a, b, a + b + mutual]);
        }
    }
    Ok(Some(total))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log-likelihood of `network` at `theta`. Exact for `n <= 5`, analytic
/// when dyad pairs are independent, otherwise path sampling with `path`
/// and `sampler` (whose seed is used for the ladder).
pub fn log_likelihood(
    spec: &ModelSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    theta: &[f64],
    sampler: &SamplerConfig,
    path: &PathConfig,
) -> Result<LogLik> {
    let n = network.n();
    let s_obs = eval_stats(spec, network, covariates)?;
    if n * (n - 1) <= MAX_EXACT_DYADS {
        let support = ExactSupport::new(spec, covariates, n)?;
        return Ok(LogLik { value: support.log_lik(theta, &s_obs), mc_se: 0.0, method: LogLikMethod::Exact });
    }
    if spec.is_dyad_independent() {
        let (x, y) = mple_design(spec, network, covariates)?;
        let mut ll = 0.0;
        for (r, &yr) in y.iter().enumerate() {
            let eta: f64 = (0..theta.len()).map(|c| theta[c] * x[(r, c)]).sum();
            ll += if yr { -log1p_exp(-eta) } else { -log1p_exp(eta) };
        }
        return Ok(LogLik { value: ll, mc_se: 0.0, method: LogLikMethod::Analytic });
    }
    if let Some(lk) = pair_log_kappa(spec, covariates, n, theta)? {
        return Ok(LogLik { value: dot(theta, &s_obs) - lk, mc_se: 0.0, method: LogLikMethod::Analytic });
    }

    // Reference: pseudolikelihood fit of the pair-independent terms, with
    // all other coefficients zero.
    let mut reference = vec![0.0; spec.len()];
    if let Some(sub) = spec.filter(pair_term) {
        let positions: Vec<usize> = sub.terms().iter().map(|t| spec.position(&t.kind).unwrap()).collect();
        if let Ok(fit) = fit_mple(&sub, network, covariates) {
            for (q, v) in positions.into_iter().zip(fit.theta) {
                reference[q] = v;
            }
        } else if let Some(q) = spec.position(&TermKind::Edges) {
            let d = network.density().clamp(0.5 / network.dyad_count() as f64, 1.0 - 0.5 / network.dyad_count() as f64);
            reference[q] = (d / (1.0 - d)).ln();
        }
    }
    let ref_log_kappa = pair_log_kappa(spec, covariates, n, &reference)?.expect("reference is pair independent");
    let direction: Vec<f64> = theta.iter().zip(&reference).map(|(t, r)| t - r).collect();

    let model = BoundModel::new(spec, covariates, n)?;
    let k = path.points.max(2);
    let h = 1.0 / (k - 1) as f64;
    let mut integral = 0.0;
    let mut variance = 0.0;
    for step in 0..k {
        let t = step as f64 * h;
        let point: Vec<f64> = reference.iter().zip(&direction).map(|(r, d)| r + t * d).collect();
        let cfg = SamplerConfig {
            n_samples: path.draws.max(sampler.chains),
            seed: derive_seed(sampler.seed, 0x1000 + step as u64),
            init: InitState::Observed,
            ..sampler.clone()
        };
        let draws = run(&model, &point, &cfg, Some(network), false)?;
        let u: Vec<f64> = draws.stats.iter().map(|s| dot(&direction, s)).collect();
        let w = if step == 0 || step == k - 1 { h / 2.0 } else { h };
        let var_u = crate::numeric::sd(&u).powi(2);
        integral += w * mean(&u);
        variance += w * w * var_u / effective_sample_size(&u);
    }
    Ok(LogLik {
        value: dot(theta, &s_obs) - ref_log_kappa - integral,
        mc_se: variance.sqrt(),
        method: LogLikMethod::PathSampling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_model_matches_exact_enumeration() {
        let _net = DirectedNetwork::from_edges(4, &[(0, 1), (1, 0), (2, 3), (1, 3)]).unwrap();
        let mut cov = CovariateSet::new(4);
        cov.add_nodal("x", vec![0.5, -1.0, 2.0, 0.0]).unwrap();
        let spec = ModelSpec::parse("edges + mutual + nodeocov(x) + absdiff(x)").unwrap();
        let theta = [-0.7, 1.1, 0.3, -0.2];
        let support = ExactSupport::new(&spec, &cov, 4).unwrap();
        let lk = pair_log_kappa(&spec, &cov, 4, &theta).unwrap().unwrap();
        assert!((lk - support.log_kappa(&theta)).abs() < 1e-10);
    }

    #[test]
    fn dependent_terms_with_zero_coefficient_are_ignored() {
        let spec = ModelSpec::parse("edges + gwidegree").unwrap();
        let cov = CovariateSet::new(3);
        let lk = pair_log_kappa(&spec, &cov, 3, &[0.0, 0.0]).unwrap().unwrap();
        assert!((lk - 6.0 * 2f64.ln()).abs() < 1e-12);
        assert!(pair_log_kappa(&spec, &cov, 3, &[0.0, 0.1]).unwrap().is_none());
    }
}
