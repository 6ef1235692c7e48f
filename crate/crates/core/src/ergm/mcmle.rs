//! Monte-Carlo maximum likelihood (Geyer–Thompson) with a capped step.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::covariates::CovariateSet;
use crate::ergm::degeneracy::{degeneracy_at, DegeneracyReport};
use crate::ergm::hull::in_convex_hull;
use crate::ergm::loglik::{log_likelihood, LogLik, PathConfig};
use crate::ergm::mple::fit_mple;
use crate::ergm::sampler::{run, SamplerConfig};
use crate::error::{Error, Result};
use crate::network::DirectedNetwork;
use crate::numeric::{derive_seed, effective_sample_size, logsumexp, two_sided_p};
use crate::stats::{eval_stats, BoundModel, ModelSpec, TermKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmleConfig {
    pub sampler: SamplerConfig,
    pub max_outer: usize,
    /// Convergence threshold on `max |theta_new - theta_old|`.
    pub tol: f64,
    /// Largest allowed change of any coefficient per outer iteration.
    pub step_cap: f64,
    pub log_lik: bool,
    pub path: PathConfig,
    /// Run the degeneracy simulation at the estimate.
    pub degeneracy: bool,
}

impl McmleConfig {
    pub fn for_size(n: usize, seed: u64) -> Self {
        McmleConfig {
            sampler: SamplerConfig::for_size(n, seed),
            max_outer: 20,
            tol: 1e-3,
            step_cap: 0.5,
            log_lik: true,
            path: PathConfig::default(),
            degeneracy: true,
        }
    }
}

/// How the starting value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartMethod {
    Mple,
    /// MPLE separated; edges at the logit of the density, everything else 0.
    DensityLogit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub in_hull: bool,
    pub step: Vec<f64>,
    pub step_capped: bool,
    pub inner_gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgmFit {
    pub terms: Vec<String>,
    pub theta_hat: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Row-major `p x p` covariance of the estimate.
    pub vcov: Vec<Vec<f64>>,
    /// Monte-Carlo standard error of each coefficient.
    pub mc_std_errors: Vec<f64>,
    pub log_lik: Option<LogLik>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub mple_start: Vec<f64>,
    pub start_method: StartMethod,
    pub mcmle_iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationTrace>,
    pub degeneracy_report: Option<DegeneracyReport>,
    pub observed_stats: Vec<f64>,
    pub n_nodes: usize,
    pub seed: u64,
}

impl ErgmFit {
    pub fn z_values(&self) -> Vec<f64> {
        self.theta_hat.iter().zip(&self.std_errors).map(|(t, s)| t / s).collect()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.z_values().into_iter().map(two_sided_p).collect()
    }

    pub fn vcov_matrix(&self) -> DMatrix<f64> {
        let p = self.theta_hat.len();
        DMatrix::from_fn(p, p, |a, b| self.vcov[a][b])
    }

    fn set_log_lik(&mut self, ll: LogLik) {
        let p = self.theta_hat.len() as f64;
        let dyads = (self.n_nodes * (self.n_nodes - 1)) as f64;
        self.aic = Some(2.0 * p - 2.0 * ll.value);
        self.bic = Some(p * dyads.ln() - 2.0 * ll.value);
        self.log_lik = Some(ll);
    }
}

/// Importance-sampling view of a sample drawn at `theta0`, centred at the
/// observed statistics: `d_m = s(y_m) - s(y_obs)`.
struct RatioObjective {
    d: Vec<DVector<f64>>,
}

struct Weighted {
    value: f64,
    grad: DVector<f64>,
    /// Weighted covariance of `s`, i.e. minus the Hessian.
    cov: DMatrix<f64>,
}

impl RatioObjective {
    /// `l(eta) = -log mean_m exp(eta' d_m)`, concave in `eta`.
    fn eval(&self, eta: &DVector<f64>) -> Weighted {
        let p = eta.len();
        let a: Vec<f64> = self.d.iter().map(|d| eta.dot(d)).collect();
        let lse = logsumexp(a.iter().copied());
        let value = -(lse - (self.d.len() as f64).ln());
        let mut mu = DVector::zeros(p);
        let mut second = DMatrix::zeros(p, p);
        for (d, ai) in self.d.iter().zip(&a) {
            let w = (ai - lse).exp();
            mu.axpy(w, d, 1.0);
            second.ger(w, d, d, 1.0);
        }
        let cov = second - &mu * mu.transpose();
        Weighted { value, grad: -mu, cov }
    }

    /// Newton ascent to a stationary point. Stops early if the estimate
    /// runs off (no finite maximiser) and returns the last iterate.
    fn maximise(&self, p: usize) -> (DVector<f64>, Weighted) {
        let mut eta = DVector::zeros(p);
        let mut cur = self.eval(&eta);
        for _ in 0..200 {
            if cur.grad.amax() < 1e-8 {
                break;
            }
            let mut h = cur.cov.clone();
            let ridge = 1e-12 * (h.trace() / p as f64).max(1e-300);
            for q in 0..p {
                h[(q, q)] += ridge;
            }
            let Some(chol) = h.cholesky() else { break };
            let step = chol.solve(&cur.grad);
            let mut scale = 1.0;
            let mut moved = false;
            for _ in 0..50 {
                let cand = &eta + &step * scale;
                let next = self.eval(&cand);
                if next.value.is_finite() && next.value >= cur.value - 1e-14 * cur.value.abs() {
                    eta = cand;
                    cur = next;
                    moved = true;
                    break;
                }
                scale *= 0.5;
            }
            if !moved || eta.amax() > 50.0 {
                break;
            }
        }
        (eta, cur)
    }
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|a| (0..m.ncols()).map(|b| m[(a, b)]).collect()).collect()
}

fn start_value(spec: &ModelSpec, network: &DirectedNetwork, covariates: &CovariateSet) -> Result<(Vec<f64>, StartMethod)> {
    match fit_mple(spec, network, covariates) {
        Ok(m) => Ok((m.theta, StartMethod::Mple)),
        Err(Error::Separation { .. }) => {
            warn!("pseudolikelihood separates; starting from the density logit");
            let mut theta = vec![0.0; spec.len()];
            if let Some(q) = spec.position(&TermKind::Edges) {
                let m = network.dyad_count() as f64;
                let d = network.density().clamp(0.5 / m, 1.0 - 0.5 / m);
                theta[q] = (d / (1.0 - d)).ln();
            }
            Ok((theta, StartMethod::DensityLogit))
        }
        Err(e) => Err(e),
    }
}

/// Fits an ERGM by Monte-Carlo maximum likelihood started from the MPLE.
///
/// Each outer iteration samples at the current value, checks that the
/// observed statistics lie in the convex hull of the sample, maximises the
/// likelihood-ratio approximation and moves at most `step_cap` in any
/// coordinate. Iteration stops once an uncapped step is below `tol` or
/// within two Monte-Carlo standard errors in every coordinate.
///
/// On hull violation or non-convergence the error carries the partial fit.
pub fn fit_mcmle(
    spec: &ModelSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    config: &McmleConfig,
) -> Result<ErgmFit> {
    let n = network.n();
    let p = spec.len();
    let model = BoundModel::new(spec, covariates, n)?;
    let s_obs = eval_stats(spec, network, covariates)?.0;
    let (start, start_method) = start_value(spec, network, covariates)?;
    let obs = DVector::from_column_slice(&s_obs);

    let mut fit = ErgmFit {
        terms: spec.labels(),
        theta_hat: start.clone(),
        std_errors: vec![f64::NAN; p],
        vcov: vec![vec![f64::NAN; p]; p],
        mc_std_errors: vec![f64::NAN; p],
        log_lik: None,
        aic: None,
        bic: None,
        mple_start: start.clone(),
        start_method,
        mcmle_iterations: 0,
        converged: false,
        trace: Vec::new(),
        degeneracy_report: None,
        observed_stats: s_obs.clone(),
        n_nodes: n,
        seed: config.sampler.seed,
    };

    // Dyad-independent terms: the pseudolikelihood is the likelihood.
    let closed_form = if spec.is_dyad_independent() && start_method == StartMethod::Mple {
        fit_mple(spec, network, covariates).ok()
    } else {
        None
    };
    if let Some(m) = closed_form {
        fit.std_errors = m.std_errors;
        fit.vcov = m.vcov;
        fit.mc_std_errors = vec![0.0; p];
        fit.converged = true;
    }

    let mut theta0 = DVector::from_vec(start);
    let outer = if fit.converged { 0 } else { config.max_outer };
    for it in 1..=outer {
        fit.mcmle_iterations = it;
        let cfg = SamplerConfig { seed: derive_seed(config.sampler.seed, it as u64), ..config.sampler.clone() };
        let sample = run(&model, theta0.as_slice(), &cfg, Some(network), false)?;
        let in_hull = in_convex_hull(&sample.stats, &s_obs);
        if !in_hull {
            fit.theta_hat = theta0.iter().copied().collect();
            fit.trace.push(IterationTrace {
                iteration: it,
                theta: fit.theta_hat.clone(),
                in_hull,
                step: vec![0.0; p],
                step_capped: false,
                inner_gradient_norm: f64::NAN,
            });
            return Err(Error::HullViolation { iteration: it, fit: Box::new(fit) });
        }
        let objective = RatioObjective { d: sample.stats.iter().map(|s| DVector::from_column_slice(s) - &obs).collect() };
        let (eta, at_eta) = objective.maximise(p);
        let big = eta.amax();
        let capped = big > config.step_cap;
        let step = if capped { &eta * (config.step_cap / big) } else { eta.clone() };
        let theta1 = &theta0 + &step;

        // Covariance at the new value from the reweighted sample.
        let cov = if capped { objective.eval(&step).cov } else { at_eta.cov };
        let vcov = cov.clone().cholesky().map(|c| c.inverse());
        let m = sample.stats.len() as f64;
        let mut mcse = vec![f64::NAN; p];
        if let Some(v) = &vcov {
            for (q, slot) in mcse.iter_mut().enumerate() {
                let col: Vec<f64> = sample.stats.iter().map(|s| s[q]).collect();
                let tau = m / effective_sample_size(&col);
                *slot = (v[(q, q)] * tau / m).sqrt();
            }
        }
        fit.theta_hat = theta1.iter().copied().collect();
        if let Some(v) = &vcov {
            fit.std_errors = (0..p).map(|q| v[(q, q)].sqrt()).collect();
            fit.vcov = to_rows(v);
        }
        fit.mc_std_errors = mcse.clone();
        fit.trace.push(IterationTrace {
            iteration: it,
            theta: fit.theta_hat.clone(),
            in_hull,
            step: step.iter().copied().collect(),
            step_capped: capped,
            inner_gradient_norm: at_eta.grad.amax(),
        });
        debug!("mcmle iteration {it}: step {:.3e}, capped {capped}", step.amax());
        let within_mc = (0..p).all(|q| step[q].abs() < 2.0 * mcse[q]);
        if !capped && vcov.is_some() && (step.amax() < config.tol || within_mc) {
            fit.converged = true;
            break;
        }
        theta0 = theta1;
    }

    if config.log_lik {
        let path_cfg = SamplerConfig { seed: derive_seed(config.sampler.seed, 0xA11), ..config.sampler.clone() };
        let ll = log_likelihood(spec, network, covariates, &fit.theta_hat, &path_cfg, &config.path)?;
        fit.set_log_lik(ll);
    }
    if config.degeneracy {
        let cfg = SamplerConfig { seed: derive_seed(config.sampler.seed, 0xD0), ..config.sampler.clone() };
        fit.degeneracy_report = Some(degeneracy_at(&fit.theta_hat, spec, network, covariates, &cfg)?);
    }
    if !fit.converged {
        let iterations = fit.mcmle_iterations;
        return Err(Error::NotConverged { iterations, fit: Box::new(fit) });
    }
    Ok(fit)
}
