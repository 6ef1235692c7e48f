//! Maximum pseudolikelihood: logistic regression of ties on change statistics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariates::CovariateSet;
use crate::error::Result;
use crate::glm::{fit_binary, Link};
use crate::network::{dyads, DirectedNetwork};
use crate::stats::{BoundModel, CachedNetwork, ModelSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MpleFit {
    pub theta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub vcov: Vec<Vec<f64>>,
    pub log_pseudo_lik: f64,
    pub condition_number: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// Design matrix of change statistics over all ordered dyads (row-major
/// dyad order) and the observed ties.
pub fn mple_design(spec: &ModelSpec, network: &DirectedNetwork, covariates: &CovariateSet) -> Result<(DMatrix<f64>, Vec<bool>)> {
    let n = network.n();
    let model = BoundModel::new(spec, covariates, n)?;
    let cached = CachedNetwork::new(network.clone(), model.partner_needs());
    let rows = n * (n - 1);
    let p = model.dim();
    let mut x = DMatrix::zeros(rows, p);
    let mut y = Vec::with_capacity(rows);
    let mut delta = vec![0.0; p];
    for (r, d) in dyads(n).enumerate() {
        model.change(&cached, d.i, d.j, &mut delta);
        for (c, v) in delta.iter().enumerate() {
            x[(r, c)] = *v;
        }
        y.push(network.edge(d.i, d.j));
    }
    Ok((x, y))
}

pub fn fit_mple(spec: &ModelSpec, network: &DirectedNetwork, covariates: &CovariateSet) -> Result<MpleFit> {
    let (x, y) = mple_design(spec, network, covariates)?;
    let fit = fit_binary(&x, &y, Link::Logit)?;
    let p = fit.coefficients.len();
    Ok(MpleFit {
        theta: fit.coefficients,
        std_errors: fit.std_errors,
        vcov: (0..p).map(|a| (0..p).map(|b| fit.vcov[(a, b)]).collect()).collect(),
        log_pseudo_lik: fit.log_lik,
        condition_number: fit.condition_number,
        gradient_norm: fit.gradient_norm,
        iterations: fit.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn edges_only_is_logit_density() {
        let net = DirectedNetwork::from_edges(4, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let spec = ModelSpec::parse("edges").unwrap();
        let fit = fit_mple(&spec, &net, &CovariateSet::new(4)).unwrap();
        assert!((fit.theta[0] - (3.0f64 / 9.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn mutual_fixture_is_stationary() {
        let net = DirectedNetwork::from_edges(4, &[(0, 1), (1, 0), (1, 2), (2, 3), (3, 1), (0, 3)]).unwrap();
        let spec = ModelSpec::parse("edges + mutual").unwrap();
        let fit = fit_mple(&spec, &net, &CovariateSet::new(4)).unwrap();
        assert!(fit.gradient_norm < 1e-8);
    }

    #[test]
    fn empty_network_separates() {
        let net = DirectedNetwork::with_size(4).unwrap();
        let spec = ModelSpec::parse("edges").unwrap();
        assert!(matches!(fit_mple(&spec, &net, &CovariateSet::new(4)), Err(Error::Separation { .. })));
    }

    #[test]
    fn perfectly_collinear_terms_report_condition() {
        let net = DirectedNetwork::from_edges(4, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let mut cov = CovariateSet::new(4);
        cov.add_nodal("one", vec![1.0; 4]).unwrap();
        let spec = ModelSpec::parse("edges + nodeocov(one)").unwrap();
        assert!(matches!(fit_mple(&spec, &net, &cov), Err(Error::RankDeficient { .. })));
    }
}
