//! Random variates for the Gibbs sampler.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, Exp, StandardNormal};

use crate::numeric::Rng;

pub(crate) fn std_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard normal conditioned on `X >= a`. Plain rejection for small `a`,
/// otherwise Robert's translated-exponential proposal.
pub(crate) fn std_normal_above(a: f64, rng: &mut Rng) -> f64 {
    if a < 0.45 {
        loop {
            let x = std_normal(rng);
            if x >= a {
                return x;
            }
        }
    }
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = Exp::new(lambda).expect("positive rate");
    loop {
        let z = a + exp.sample(rng);
        if rng.random::<f64>() <= (-0.5 * (z - lambda).powi(2)).exp() {
            return z;
        }
    }
}

/// `N(mean, sd^2)` truncated to `(0, inf)` when `positive`, else `(-inf, 0]`.
pub(crate) fn truncated_normal(mean: f64, sd: f64, positive: bool, rng: &mut Rng) -> f64 {
    if positive {
        let x = mean + sd * std_normal_above(-mean / sd, rng);
        x.max(f64::MIN_POSITIVE)
    } else {
        (mean - sd * std_normal_above(mean / sd, rng)).min(0.0)
    }
}

/// Draw from `N(P^{-1} l, P^{-1})` given precision `P` and linear term `l`.
pub(crate) fn mvn_canonical(precision: &DMatrix<f64>, linear: &DVector<f64>, rng: &mut Rng) -> Option<DVector<f64>> {
    let chol = precision.clone().cholesky()?;
    let mean = chol.solve(linear);
    let z = DVector::from_fn(linear.len(), |_, _| std_normal(rng));
    // L' x = z gives x with covariance P^{-1}
    let l = chol.l();
    let x = l.transpose().solve_upper_triangular(&z)?;
    Some(mean + x)
}

/// Wishart draw with scale `scale` and `df` degrees of freedom (Bartlett).
pub(crate) fn wishart(scale: &DMatrix<f64>, df: f64, rng: &mut Rng) -> Option<DMatrix<f64>> {
    let k = scale.nrows();
    let l = scale.clone().cholesky()?.l();
    let mut a = DMatrix::zeros(k, k);
    for r in 0..k {
        a[(r, r)] = ChiSquared::new(df - r as f64).ok()?.sample(rng).sqrt();
        for c in 0..r {
            a[(r, c)] = std_normal(rng);
        }
    }
    let la = l * a;
    Some(&la * la.transpose())
}

/// Inverse-Wishart draw `IW(psi, df)`, i.e. the inverse of a
/// `Wishart(psi^{-1}, df)` draw.
pub(crate) fn inverse_wishart(psi: &DMatrix<f64>, df: f64, rng: &mut Rng) -> Option<DMatrix<f64>> {
    let psi_inv = psi.clone().cholesky()?.inverse();
    let w = wishart(&psi_inv, df, rng)?;
    let mut s = w.cholesky()?.inverse();
    // symmetrise against rounding
    let t = s.transpose();
    s = (s + t) * 0.5;
    Some(s)
}
