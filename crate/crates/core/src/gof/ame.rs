//! Posterior predictive checks for AME and probit fits.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ame::{simulate_from_mu, AmePosterior, DyadDesign, GlmTable};
use crate::covariates::CovariateSet;
use crate::error::{Error, Result};
use crate::gof::bands::{share_inside, GofBin};
use crate::gof::ergm::MIN_SIMULATIONS;
use crate::network::DirectedNetwork;
use crate::numeric::{rng_stream, sd, Rng};

pub const AME_DIAGNOSTICS: [&str; 4] = ["sd.rowmean", "sd.colmean", "dyad.dep", "triad.dep"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmeGofReport {
    /// One bin per entry of [`AME_DIAGNOSTICS`], family `ame`.
    pub diagnostics: Vec<GofBin>,
    pub n_simulations: usize,
}

impl AmeGofReport {
    pub fn get(&self, name: &str) -> Option<&GofBin> {
        self.diagnostics.iter().find(|b| b.bin == name)
    }

    pub fn share_inside(&self) -> f64 {
        share_inside(&self.diagnostics)
    }
}

fn tie(y: &DirectedNetwork, i: usize, j: usize) -> f64 {
    y.edge(i, j) as u8 as f64
}

/// Standard deviation of the row means (sender heterogeneity).
pub fn sd_row_means(y: &DirectedNetwork) -> f64 {
    let m = (y.n() - 1) as f64;
    let rows: Vec<f64> = (0..y.n()).map(|i| y.out_degree(i) as f64 / m).collect();
    sd(&rows)
}

/// Standard deviation of the column means (receiver heterogeneity).
pub fn sd_col_means(y: &DirectedNetwork) -> f64 {
    let m = (y.n() - 1) as f64;
    let cols: Vec<f64> = (0..y.n()).map(|j| y.in_degree(j) as f64 / m).collect();
    sd(&cols)
}

/// Correlation between `y_ij` and `y_ji`, each unordered pair entering in
/// both orientations. Zero when there is no variation.
pub fn dyadic_dependence(y: &DirectedNetwork) -> f64 {
    let n = y.n();
    let ybar = y.density();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                num += (tie(y, i, j) - ybar) * (tie(y, j, i) - ybar);
                den += (tie(y, i, j) - ybar).powi(2);
            }
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// `sum_{i,j,k distinct} E_ij E_jk E_ik / (n(n-1)(n-2) s^3)` with
/// `E = y - mean(y)` and `s` the off-diagonal standard deviation of `y`.
pub fn triadic_dependence(y: &DirectedNetwork) -> f64 {
    let n = y.n();
    let ybar = y.density();
    let off: Vec<f64> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| tie(y, i, j)).collect();
    let s = sd(&off);
    if s == 0.0 || n < 3 {
        return 0.0;
    }
    let e = |i: usize, j: usize| tie(y, i, j) - ybar;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let eij = e(i, j);
            for k in 0..n {
                if k != i && k != j {
                    total += eij * e(j, k) * e(i, k);
                }
            }
        }
    }
    total / ((n * (n - 1) * (n - 2)) as f64 * s.powi(3))
}

pub fn ame_diagnostics(y: &DirectedNetwork) -> [f64; 4] {
    [sd_row_means(y), sd_col_means(y), dyadic_dependence(y), triadic_dependence(y)]
}

/// Simulates `n_sim` networks, each from `(mu, rho)` returned by `draw`
/// with its own substream `(seed, s)`.
fn predictive<F>(observed: &DirectedNetwork, n_sim: usize, seed: u64, draw: F) -> Result<AmeGofReport>
where
    F: Fn(&mut Rng) -> (Vec<f64>, f64) + Sync,
{
    if n_sim < MIN_SIMULATIONS {
        return Err(Error::InvalidConfig(format!("goodness of fit needs at least {MIN_SIMULATIONS} simulations, got {n_sim}")));
    }
    let n = observed.n();
    let sims: Vec<[f64; 4]> = (0..n_sim)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_stream(seed, s as u64);
            let (mu, rho) = draw(&mut rng);
            ame_diagnostics(&simulate_from_mu(&mu, n, rho, &mut rng))
        })
        .collect();
    let obs = ame_diagnostics(observed);
    let diagnostics = AME_DIAGNOSTICS
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let col: Vec<f64> = sims.iter().map(|s| s[k]).collect();
            GofBin::new("ame", *name, obs[k], &col)
        })
        .collect();
    Ok(AmeGofReport { diagnostics, n_simulations: n_sim })
}

/// Posterior predictive check: each simulation picks a retained draw
/// uniformly with replacement and draws a network from it, fresh pair
/// errors included.
pub fn gof_ame(
    posterior: &AmePosterior,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    n_sim: usize,
    seed: u64,
) -> Result<AmeGofReport> {
    if posterior.draws.is_empty() {
        return Err(Error::TooFewDraws { got: 0, need: 1 });
    }
    let design = DyadDesign::new(&posterior.spec, covariates, network.n())?;
    let m = posterior.draws.len();
    predictive(network, n_sim, seed, |rng| {
        let k = rng.random_range(0..m);
        (posterior.linear_predictor(&design, k), posterior.draws[k].rho)
    })
}

/// The same check for a probit fit at its estimate (independent dyads).
pub fn gof_probit(
    fit: &GlmTable,
    design: &DyadDesign,
    network: &DirectedNetwork,
    n_sim: usize,
    seed: u64,
) -> Result<AmeGofReport> {
    let n = network.n();
    let beta = nalgebra::DVector::from_column_slice(&fit.fit.coefficients);
    let eta = &design.x * beta;
    let mut mu = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                mu[i * n + j] = eta[design.row(i, j)];
            }
        }
    }
    predictive(network, n_sim, seed, |_| (mu.clone(), 0.0))
}
