//! Nodal and dyadic covariates aligned to a network's node order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major `n x n` real matrix; the diagonal is carried but never read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DyadicMatrix {
    pub fn zeros(n: usize) -> Self {
        DyadicMatrix { n, values: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.values[i * n + j] = f(i, j);
                }
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    fn off_diagonal_finite(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j).is_finite()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CovariateSet {
    n: usize,
    nodal: BTreeMap<String, Vec<f64>>,
    dyadic: BTreeMap<String, DyadicMatrix>,
    /// Per dyadic covariate, how many off-diagonal entries were absent from
    /// the source and defaulted to zero.
    missing_dyadic: BTreeMap<String, usize>,
}

impl CovariateSet {
    pub fn new(n: usize) -> Self {
        CovariateSet { n, ..Default::default() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_nodal(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: format!("nodal covariate `{name}`"),
                expected: self.n,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("nodal covariate `{name}`")));
        }
        self.nodal.insert(name, values);
        Ok(())
    }

    pub fn add_dyadic(&mut self, name: impl Into<String>, values: DyadicMatrix) -> Result<()> {
        self.add_dyadic_with_missing(name, values, 0)
    }

    pub(crate) fn add_dyadic_with_missing(
        &mut self,
        name: impl Into<String>,
        values: DyadicMatrix,
        missing: usize,
    ) -> Result<()> {
        let name = name.into();
        if values.n() != self.n {
            return Err(Error::DimensionMismatch {
                what: format!("dyadic covariate `{name}`"),
                expected: self.n,
                got: values.n(),
            });
        }
        if !values.off_diagonal_finite() {
            return Err(Error::NonFinite(format!("dyadic covariate `{name}`")));
        }
        self.missing_dyadic.insert(name.clone(), missing);
        self.dyadic.insert(name, values);
        Ok(())
    }

    pub fn nodal(&self, name: &str) -> Result<&[f64]> {
        self.nodal
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownCovariate(name.to_string()))
    }

    pub fn dyadic(&self, name: &str) -> Result<&DyadicMatrix> {
        self.dyadic.get(name).ok_or_else(|| Error::UnknownCovariate(name.to_string()))
    }

    pub fn nodal_names(&self) -> impl Iterator<Item = &str> {
        self.nodal.keys().map(String::as_str)
    }

    pub fn dyadic_names(&self) -> impl Iterator<Item = &str> {
        self.dyadic.keys().map(String::as_str)
    }

    /// Number of entries of `name` that were defaulted to zero at load time.
    pub fn missing_count(&self, name: &str) -> usize {
        self.missing_dyadic.get(name).copied().unwrap_or(0)
    }

    /// Re-indexes every covariate so that new node `k` is old node `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        crate::network::check_permutation(perm, self.n)?;
        let mut out = CovariateSet::new(self.n);
        for (name, v) in &self.nodal {
            out.nodal.insert(name.clone(), perm.iter().map(|&p| v[p]).collect());
        }
        for (name, m) in &self.dyadic {
            let pm = DyadicMatrix::from_fn(self.n, |a, b| m.get(perm[a], perm[b]));
            out.dyadic.insert(name.clone(), pm);
        }
        out.missing_dyadic = self.missing_dyadic.clone();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_non_finite() {
        let mut c = CovariateSet::new(3);
        assert!(matches!(
            c.add_nodal("x", vec![1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(c.add_nodal("x", vec![1.0, f64::NAN, 0.0]), Err(Error::NonFinite(_))));
        let mut m = DyadicMatrix::zeros(3);
        m.set(0, 1, f64::INFINITY);
        assert!(matches!(c.add_dyadic("d", m), Err(Error::NonFinite(_))));
        assert!(matches!(c.nodal("nope"), Err(Error::UnknownCovariate(_))));
    }

    #[test]
    fn diagonal_is_ignored() {
        let mut c = CovariateSet::new(2);
        let mut m = DyadicMatrix::zeros(2);
        m.set(0, 0, f64::NAN);
        m.set(0, 1, 1.5);
        c.add_dyadic("d", m).unwrap();
        assert_eq!(c.dyadic("d").unwrap().get(0, 1), 1.5);
    }
}
