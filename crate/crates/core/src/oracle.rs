//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing here calls into `stats`, `glm`, `ergm` or `gof`: statistics are
//! recomputed from their definitions with plain loops, the GLM is fitted by
//! textbook IRLS with its own linear solver, and the AUC is a pair count.

use serde::{Deserialize, Serialize};

use crate::covariates::CovariateSet;
use crate::error::{Error, Result};
use crate::network::DirectedNetwork;
use crate::stats::{EspVariant, ModelSpec, TermKind};

/// Largest network accepted by [`brute_stats`].
pub const BRUTE_MAX_NODES: usize = 12;
/// Largest network accepted by [`brute_log_kappa`].
pub const BRUTE_ENUM_MAX_NODES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub values: Vec<f64>,
    pub method: String,
    /// Number of elementary loop iterations performed.
    pub cost: u64,
}

fn adjacency(net: &DirectedNetwork) -> Vec<Vec<bool>> {
    let n = net.n();
    let mut y = vec![vec![false; n]; n];
    for (i, j) in net.edges() {
        y[i][j] = true;
    }
    y
}

fn gw(decay: f64, k: usize) -> f64 {
    let r = 1.0 - (-decay).exp();
    decay.exp() * (1.0 - r.powi(k as i32))
}

fn shares(variant: EspVariant, y: &[Vec<bool>], i: usize, j: usize, h: usize) -> bool {
    match variant {
        EspVariant::Otp => y[i][h] && y[h][j],
        EspVariant::Isp => y[h][i] && y[h][j],
        EspVariant::Osp => y[i][h] && y[j][h],
        EspVariant::Itp => y[h][i] && y[j][h],
    }
}

/// Model statistics by direct summation over dyads, nodes and triples.
pub fn brute_stats(spec: &ModelSpec, network: &DirectedNetwork, covariates: &CovariateSet) -> Result<OracleResult> {
    let n = network.n();
    if n > BRUTE_MAX_NODES {
        return Err(Error::TooLarge { what: "brute-force statistics", n, limit: BRUTE_MAX_NODES });
    }
    let y = adjacency(network);
    let mut cost = 0u64;
    let mut values = Vec::with_capacity(spec.len());
    let in_deg = |j: usize| (0..n).filter(|&i| y[i][j]).count();
    let out_deg = |i: usize| (0..n).filter(|&j| y[i][j]).count();
    for term in spec.terms() {
        let mut v = 0.0;
        let dyad_sum = |f: &dyn Fn(usize, usize) -> f64, cost: &mut u64| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    *cost += 1;
                    if i != j && y[i][j] {
                        s += f(i, j);
                    }
                }
            }
            s
        };
        match &term.kind {
            TermKind::Edges => v = dyad_sum(&|_, _| 1.0, &mut cost),
            TermKind::Mutual => v = dyad_sum(&|i, j| if i < j && y[j][i] { 1.0 } else { 0.0 }, &mut cost),
            TermKind::NodeOutCov(c) => {
                let x = covariates.nodal(c)?;
                v = dyad_sum(&|i, _| x[i], &mut cost);
            }
            TermKind::NodeInCov(c) => {
                let x = covariates.nodal(c)?;
                v = dyad_sum(&|_, j| x[j], &mut cost);
            }
            TermKind::EdgeCov(c) => {
                let w = covariates.dyadic(c)?;
                v = dyad_sum(&|i, j| w.get(i, j), &mut cost);
            }
            TermKind::AbsDiffCov(c) => {
                let x = covariates.nodal(c)?;
                v = dyad_sum(&|i, j| (x[i] - x[j]).abs(), &mut cost);
            }
            TermKind::GwIdegree { decay } => {
                for k in 0..n {
                    cost += n as u64;
                    v += gw(*decay, in_deg(k));
                }
            }
            TermKind::GwOdegree { decay } => {
                for k in 0..n {
                    cost += n as u64;
                    v += gw(*decay, out_deg(k));
                }
            }
            TermKind::GwEsp { variant, decay } => {
                for i in 0..n {
                    for j in 0..n {
                        if i == j || !y[i][j] {
                            continue;
                        }
                        let mut k = 0;
                        for h in 0..n {
                            cost += 1;
                            if h != i && h != j && shares(*variant, &y, i, j, h) {
                                k += 1;
                            }
                        }
                        v += gw(*decay, k);
                    }
                }
            }
            TermKind::IdegreeCount(k) => {
                cost += (n * n) as u64;
                v = (0..n).filter(|&j| in_deg(j) == *k).count() as f64;
            }
            TermKind::OdegreeCount(k) => {
                cost += (n * n) as u64;
                v = (0..n).filter(|&i| out_deg(i) == *k).count() as f64;
            }
        }
        values.push(v);
    }
    Ok(OracleResult { values, method: "definition sums".into(), cost })
}

/// `log kappa(theta)` by listing every network on `n <= 4` nodes and
/// evaluating [`brute_stats`] on each.
pub fn brute_log_kappa(spec: &ModelSpec, covariates: &CovariateSet, theta: &[f64], n: usize) -> Result<OracleResult> {
    if n > BRUTE_ENUM_MAX_NODES {
        return Err(Error::TooLarge { what: "brute-force enumeration", n, limit: BRUTE_ENUM_MAX_NODES });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut terms = Vec::with_capacity(1 << pairs.len());
    let mut cost = 0;
    for mask in 0u32..1 << pairs.len() {
        let edges: Vec<(usize, usize)> =
            pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e).collect();
        let s = brute_stats(spec, &DirectedNetwork::from_edges(n, &edges)?, covariates)?;
        cost += s.cost;
        terms.push(s.values.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>());
    }
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let value = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
    Ok(OracleResult { values: vec![value], method: "full enumeration".into(), cost })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleLink {
    Logit,
    Probit,
}

fn phi_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn phi_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let p = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for c in 0..p {
        let piv = (c..p).max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs()))?;
        if a[piv][c].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..p {
            let f = a[r][c] / a[c][c];
            for k in c..p {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; p];
    for c in (0..p).rev() {
        let s: f64 = (c + 1..p).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

/// Binary GLM by iteratively reweighted least squares. `x` holds one row
/// per observation. Iterates until the score norm is below `1e-10` and the
/// last update is negligible; a vanishing score alone also happens while
/// the coefficients run off to infinity.
pub fn glm_irls(x: &[Vec<f64>], y: &[bool], link: OracleLink) -> Result<OracleResult> {
    let p = x.first().map_or(0, Vec::len);
    if x.len() != y.len() || p == 0 {
        return Err(Error::DimensionMismatch { what: "design".into(), expected: y.len(), got: x.len() });
    }
    let mut beta = vec![0.0; p];
    let mut cost = 0u64;
    let mut last_step = f64::INFINITY;
    for it in 0..200 {
        let mut xtwx = vec![vec![0.0; p]; p];
        let mut xtwz = vec![0.0; p];
        let mut score = vec![0.0; p];
        for (row, &yi) in x.iter().zip(y) {
            let eta: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let (mu, dmu) = match link {
                OracleLink::Logit => {
                    let m = 1.0 / (1.0 + (-eta).exp());
                    (m, m * (1.0 - m))
                }
                OracleLink::Probit => (phi_cdf(eta), phi_pdf(eta)),
            };
            let var = (mu * (1.0 - mu)).max(1e-300);
            let w = dmu * dmu / var;
            let resid = yi as u8 as f64 - mu;
            let z = eta + resid / dmu.max(1e-300);
            for a in 0..p {
                score[a] += row[a] * resid * dmu / var;
                xtwz[a] += row[a] * w * z;
                for b in 0..p {
                    xtwx[a][b] += row[a] * w * row[b];
                }
            }
            cost += (p * p) as u64;
        }
        if score.iter().map(|s| s * s).sum::<f64>().sqrt() < 1e-10 && last_step < 1e-6 {
            return Ok(OracleResult { values: beta, method: format!("IRLS ({it} iterations)"), cost });
        }
        let next = match solve(xtwx, xtwz) {
            Some(b) => b,
            None if it == 0 => return Err(Error::RankDeficient { condition: f64::INFINITY }),
            None => return Err(Error::Separation { iterations: it }),
        };
        last_step = next.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = next;
        if beta.iter().any(|b| !b.is_finite() || b.abs() > 1e3) {
            return Err(Error::Separation { iterations: it });
        }
    }
    Err(Error::Separation { iterations: 200 })
}

/// `P(score+ > score-)` with ties counted one half, over every
/// positive/negative pair.
pub fn pair_auc(labels: &[bool], scores: &[f64]) -> Result<OracleResult> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch { what: "scores".into(), expected: labels.len(), got: scores.len() });
    }
    let pos: Vec<f64> = labels.iter().zip(scores).filter(|(l, _)| **l).map(|(_, s)| *s).collect();
    let neg: Vec<f64> = labels.iter().zip(scores).filter(|(l, _)| !**l).map(|(_, s)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateLabels);
    }
    let mut twice = 0u128;
    for a in &pos {
        for b in &neg {
            twice += if a > b {
                2
            } else if a == b {
                1
            } else {
                0
            };
        }
    }
    let pairs = pos.len() as u128 * neg.len() as u128;
    Ok(OracleResult {
        values: vec![twice as f64 / (2 * pairs) as f64],
        method: "pair count".into(),
        cost: pairs as u64,
    })
}
