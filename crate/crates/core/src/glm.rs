//! Binary-response GLMs (logit and probit) by Newton / Fisher scoring.
//!
//! Used for the maximum pseudolikelihood fit, the classical probit baseline
//! and dyad-level logistic regression. Standard errors come from the
//! (expected) information at the optimum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{condition_number, mills_series, log1p_exp, log_norm_cdf, logistic, norm_cdf, norm_pdf, spd_inverse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logit,
    Probit,
}

impl std::str::FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logit" => Ok(Link::Logit),
            "probit" => Ok(Link::Probit),
            other => Err(Error::InvalidConfig(format!("unknown link `{other}`"))),
        }
    }
}

impl Link {
    /// Inverse link `P(y = 1 | eta)`.
    pub fn mean(self, eta: f64) -> f64 {
        match self {
            Link::Logit => logistic(eta),
            Link::Probit => norm_cdf(eta),
        }
    }

    fn log_lik(self, eta: f64, y: bool) -> f64 {
        match (self, y) {
            (Link::Logit, true) => -log1p_exp(-eta),
            (Link::Logit, false) => -log1p_exp(eta),
            (Link::Probit, true) => log_norm_cdf(eta),
            (Link::Probit, false) => log_norm_cdf(-eta),
        }
    }

    /// Score factor `d loglik / d eta` and Fisher weight for one observation.
    fn score_weight(self, eta: f64, y: bool) -> (f64, f64) {
        match self {
            Link::Logit => {
                let p = logistic(eta);
                ((y as u8 as f64) - p, p * (1.0 - p))
            }
            Link::Probit => {
                // Inverse Mills ratios computed on the side of the observed
                // outcome stay finite far into the tails.
                let lam_pos = mills(eta);
                let lam_neg = mills(-eta);
                let score = if y { lam_pos } else { -lam_neg };
                // phi^2 / (Phi (1 - Phi))
                (score, lam_pos * lam_neg)
            }
        }
    }
}

/// `phi(x) / Phi(x)`.
fn mills(x: f64) -> f64 {
    if x > -30.0 {
        norm_pdf(x) / norm_cdf(x)
    } else {
        -x / mills_series(x)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlmFit {
    pub link: Link,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    #[serde(skip)]
    pub vcov: DMatrix<f64>,
    pub log_lik: f64,
    pub aic: f64,
    pub bic: f64,
    pub iterations: usize,
    /// Condition number of the column-scaled cross-product `X'X`.
    pub condition_number: f64,
    /// Max absolute score component at the returned estimate.
    pub gradient_norm: f64,
    pub n_obs: usize,
}

const MAX_ITER: usize = 100;
const MAX_CONDITION: f64 = 1e12;

/// Condition number of `X'X` after scaling columns to unit norm.
pub fn scaled_condition(x: &DMatrix<f64>) -> f64 {
    let xtx = x.transpose() * x;
    let p = xtx.nrows();
    let d: Vec<f64> = (0..p).map(|a| xtx[(a, a)].sqrt()).collect();
    if d.iter().any(|&v| v == 0.0) {
        return f64::INFINITY;
    }
    let scaled = DMatrix::from_fn(p, p, |a, b| xtx[(a, b)] / (d[a] * d[b]));
    condition_number(&scaled)
}

/// Maximum-likelihood fit of `P(y = 1) = link^{-1}(x' beta)`.
pub fn fit_binary(x: &DMatrix<f64>, y: &[bool], link: Link) -> Result<GlmFit> {
    let (rows, p) = x.shape();
    if rows != y.len() {
        return Err(Error::DimensionMismatch { what: "glm response".into(), expected: rows, got: y.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("glm design".into()));
    }
    let condition = scaled_condition(x);
    if !(condition < MAX_CONDITION) {
        return Err(Error::RankDeficient { condition });
    }

    let eval = |beta: &DVector<f64>| -> (f64, DVector<f64>, DMatrix<f64>) {
        let eta = x * beta;
        let mut ll = 0.0;
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for r in 0..rows {
            ll += link.log_lik(eta[r], y[r]);
            let (s, w) = link.score_weight(eta[r], y[r]);
            for a in 0..p {
                let xa = x[(r, a)];
                grad[a] += s * xa;
                if w != 0.0 {
                    for b in a..p {
                        info[(a, b)] += w * xa * x[(r, b)];
                    }
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[(a, b)] = info[(b, a)];
            }
        }
        (ll, grad, info)
    };

    // Newton converges quadratically when the MLE exists; under
    // separation the steps stay of order one while the estimate drifts to
    // infinity, so the iteration cap doubles as the separation check.
    let mut beta = DVector::zeros(p);
    let (mut ll, mut grad, mut info) = eval(&beta);
    let mut iterations = 0;
    loop {
        if iterations == MAX_ITER {
            return Err(Error::Separation { iterations });
        }
        iterations += 1;
        let step = match info.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => {
                return Err(if beta.amax() > 10.0 {
                    Error::Separation { iterations }
                } else {
                    Error::RankDeficient { condition: condition_number(&info) }
                })
            }
        };
        let mut scale = 1.0;
        for _ in 0..40 {
            let cand = &beta + &step * scale;
            let (cll, cgrad, cinfo) = eval(&cand);
            if cll.is_finite() && cll >= ll - 1e-12 * ll.abs().max(1.0) {
                beta = cand;
                ll = cll;
                grad = cgrad;
                info = cinfo;
                break;
            }
            scale *= 0.5;
        }
        if step.amax() * scale < 1e-9 * (1.0 + beta.amax()) {
            break;
        }
    }
    let vcov = spd_inverse(&info).ok_or(Error::RankDeficient { condition: condition_number(&info) })?;
    let std_errors = (0..p).map(|a| vcov[(a, a)].sqrt()).collect();
    let k = p as f64;
    Ok(GlmFit {
        link,
        coefficients: beta.iter().copied().collect(),
        std_errors,
        vcov,
        log_lik: ll,
        aic: 2.0 * k - 2.0 * ll,
        bic: k * (rows as f64).ln() - 2.0 * ll,
        iterations,
        condition_number: condition,
        gradient_norm: grad.amax(),
        n_obs: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_only_logit_is_logit_of_mean() {
        let x = DMatrix::from_element(10, 1, 1.0);
        let y: Vec<bool> = (0..10).map(|k| k < 3).collect();
        let fit = fit_binary(&x, &y, Link::Logit).unwrap();
        assert!((fit.coefficients[0] - (0.3f64 / 0.7).ln()).abs() < 1e-10);
        assert!(fit.gradient_norm < 1e-10);
    }

    #[test]
    fn intercept_only_probit_is_quantile_of_mean() {
        let x = DMatrix::from_element(8, 1, 1.0);
        let y: Vec<bool> = (0..8).map(|k| k % 2 == 0).collect();
        let fit = fit_binary(&x, &y, Link::Probit).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-10);
    }

    #[test]
    fn separation_is_detected() {
        let x = DMatrix::from_fn(6, 2, |r, c| if c == 0 { 1.0 } else { r as f64 });
        let y = [false, false, false, true, true, true];
        for link in [Link::Logit, Link::Probit] {
            assert!(matches!(fit_binary(&x, &y, link), Err(Error::Separation { .. })));
        }
    }

    #[test]
    fn collinear_design_is_rank_deficient() {
        let x = DMatrix::from_fn(6, 3, |r, c| match c {
            0 => 1.0,
            1 => r as f64,
            _ => 2.0 * r as f64,
        });
        let y = [false, true, false, true, true, false];
        assert!(matches!(fit_binary(&x, &y, Link::Logit), Err(Error::RankDeficient { .. })));
    }
}
