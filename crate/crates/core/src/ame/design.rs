//! Dyad-level regression design for AME and probit/logit baselines.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariates::CovariateSet;
use crate::error::{Error, Result};
use crate::glm::{fit_binary, GlmFit, Link};
use crate::network::{dyads, DirectedNetwork};

/// Model structure of an AME probit fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmeSpec {
    pub sender_covariates: Vec<String>,
    pub receiver_covariates: Vec<String>,
    pub dyadic_covariates: Vec<String>,
    /// Dimension `d` of the multiplicative effects `u_i' v_j`.
    pub latent_dim: usize,
    pub include_additive: bool,
    pub include_dyadic_correlation: bool,
    pub intercept: bool,
}

impl Default for AmeSpec {
    fn default() -> Self {
        AmeSpec {
            sender_covariates: Vec::new(),
            receiver_covariates: Vec::new(),
            dyadic_covariates: Vec::new(),
            latent_dim: 0,
            include_additive: true,
            include_dyadic_correlation: true,
            intercept: true,
        }
    }
}

impl AmeSpec {
    /// Plain probit regression: no random effects, no correlation.
    pub fn regression_only(&self) -> AmeSpec {
        AmeSpec { latent_dim: 0, include_additive: false, include_dyadic_correlation: false, ..self.clone() }
    }

    pub fn validate(&self, n: usize, covariates: &CovariateSet) -> Result<()> {
        if self.latent_dim > n.saturating_sub(1) {
            return Err(Error::InvalidConfig(format!("latent dimension {} exceeds n - 1 = {}", self.latent_dim, n - 1)));
        }
        for name in self.sender_covariates.iter().chain(&self.receiver_covariates) {
            covariates.nodal(name)?;
        }
        for name in &self.dyadic_covariates {
            covariates.dyadic(name)?;
        }
        if !self.intercept && self.coefficient_labels().is_empty() {
            return Err(Error::InvalidConfig("model has no regression coefficients".into()));
        }
        Ok(())
    }

    /// Coefficient names in design-column order.
    pub fn coefficient_labels(&self) -> Vec<String> {
        let mut labels = Vec::new();
        if self.intercept {
            labels.push("intercept".to_string());
        }
        labels.extend(self.sender_covariates.iter().map(|c| format!("sender.{c}")));
        labels.extend(self.receiver_covariates.iter().map(|c| format!("receiver.{c}")));
        labels.extend(self.dyadic_covariates.iter().map(|c| format!("dyad.{c}")));
        labels
    }
}

/// Covariate rows `x_ij` for every ordered dyad in row-major order.
#[derive(Debug, Clone)]
pub struct DyadDesign {
    pub labels: Vec<String>,
    pub n: usize,
    pub x: DMatrix<f64>,
}

impl DyadDesign {
    pub fn new(spec: &AmeSpec, covariates: &CovariateSet, n: usize) -> Result<Self> {
        spec.validate(n, covariates)?;
        if covariates.n() != n && spec.coefficient_labels().len() > spec.intercept as usize {
            return Err(Error::DimensionMismatch { what: "covariate set".into(), expected: n, got: covariates.n() });
        }
        let labels = spec.coefficient_labels();
        let sender: Vec<&[f64]> = spec.sender_covariates.iter().map(|c| covariates.nodal(c)).collect::<Result<_>>()?;
        let receiver: Vec<&[f64]> =
            spec.receiver_covariates.iter().map(|c| covariates.nodal(c)).collect::<Result<_>>()?;
        let dyadic: Vec<_> = spec.dyadic_covariates.iter().map(|c| covariates.dyadic(c)).collect::<Result<_>>()?;
        let mut x = DMatrix::zeros(n * (n - 1), labels.len());
        for (r, d) in dyads(n).enumerate() {
            let mut c = 0;
            if spec.intercept {
                x[(r, c)] = 1.0;
                c += 1;
            }
            for s in &sender {
                x[(r, c)] = s[d.i];
                c += 1;
            }
            for s in &receiver {
                x[(r, c)] = s[d.j];
                c += 1;
            }
            for m in &dyadic {
                x[(r, c)] = m.get(d.i, d.j);
                c += 1;
            }
        }
        Ok(DyadDesign { labels, n, x })
    }

    /// Row of dyad `(i, j)`.
    #[inline]
    pub fn row(&self, i: usize, j: usize) -> usize {
        i * (self.n - 1) + if j > i { j - 1 } else { j }
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

pub(crate) fn responses(network: &DirectedNetwork) -> Vec<bool> {
    dyads(network.n()).map(|d| network.edge(d.i, d.j)).collect()
}

/// A dyad-level GLM fit with coefficient names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlmTable {
    pub labels: Vec<String>,
    pub fit: GlmFit,
}

/// Dyad-independent binary regression of the ties on the covariates named
/// in `spec` (random-effect settings are ignored).
pub fn fit_glm(spec: &AmeSpec, network: &DirectedNetwork, covariates: &CovariateSet, link: Link) -> Result<GlmTable> {
    let design = DyadDesign::new(spec, covariates, network.n())?;
    let fit = fit_binary(&design.x, &responses(network), link)?;
    Ok(GlmTable { labels: design.labels, fit })
}

/// Classical probit regression, the AME model without node effects.
pub fn fit_probit(spec: &AmeSpec, network: &DirectedNetwork, covariates: &CovariateSet) -> Result<GlmTable> {
    fit_glm(spec, network, covariates, Link::Probit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariates::DyadicMatrix;

    #[test]
    fn design_layout() {
        let mut cov = CovariateSet::new(3);
        cov.add_nodal("g", vec![1.0, 2.0, 3.0]).unwrap();
        cov.add_dyadic("d", DyadicMatrix::from_fn(3, |i, j| (10 * i + j) as f64)).unwrap();
        let spec = AmeSpec {
            sender_covariates: vec!["g".into()],
            receiver_covariates: vec!["g".into()],
            dyadic_covariates: vec!["d".into()],
            ..AmeSpec::default()
        };
        let d = DyadDesign::new(&spec, &cov, 3).unwrap();
        assert_eq!(d.labels, ["intercept", "sender.g", "receiver.g", "dyad.d"]);
        let r = d.row(2, 0);
        assert_eq!(r, 4);
        assert_eq!(d.x.row(r).iter().copied().collect::<Vec<_>>(), vec![1.0, 3.0, 1.0, 20.0]);
    }

    #[test]
    fn latent_dimension_bounded() {
        let spec = AmeSpec { latent_dim: 3, ..AmeSpec::default() };
        assert!(spec.validate(3, &CovariateSet::new(3)).is_err());
        assert!(spec.validate(4, &CovariateSet::new(4)).is_ok());
    }

    #[test]
    fn probit_on_half_density_has_zero_intercept() {
        let net = DirectedNetwork::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let fit = fit_probit(&AmeSpec::default(), &net, &CovariateSet::new(3)).unwrap();
        assert!(fit.fit.coefficients[0].abs() < 1e-10);
    }
}
