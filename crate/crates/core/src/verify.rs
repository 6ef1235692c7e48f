//! Agreement checks between the fast paths and the [`crate::oracle`]
//! implementations, on built-in fixtures.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::ame::{fit_probit, AmeSpec, DyadDesign};
use crate::covariates::{CovariateSet, DyadicMatrix};
use crate::ergm::{enumerate_exact, fit_mple, mple_design};
use crate::error::Result;
use crate::gof::curves;
use crate::network::{dyads, DirectedNetwork};
use crate::numeric::{rng_stream, Rng};
use crate::oracle::{brute_log_kappa, brute_stats, glm_irls, pair_auc, OracleLink};
use crate::stats::{change_stats, eval_stats, ModelSpec};
use crate::DyadIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerifyOptions {
    /// Adds this amount to the first fast-path statistic before comparing,
    /// to confirm the suite notices a wrong statistic.
    pub corrupt_statistic: Option<f64>,
}

/// Every term kind, with all four shared-partner variants.
pub const FULL_FORMULA: &str = "edges + mutual + nodeocov(x) + nodeicov(x) + edgecov(w) + absdiff(x) + \
     gwidegree + gwodegree(0.3) + gwesp(otp) + gwesp(isp, 1.2) + gwesp(osp) + gwesp(itp, 0.5) + \
     idegree(1) + odegree(2)";

pub fn random_network(n: usize, density: f64, rng: &mut Rng) -> DirectedNetwork {
    let mut net = DirectedNetwork::with_size(n).expect("n >= 2");
    for d in dyads(n) {
        if rng.random_bool(density) {
            net.set_edge(d.i, d.j, true);
        }
    }
    net
}

pub fn random_covariates(n: usize, rng: &mut Rng) -> CovariateSet {
    let mut cov = CovariateSet::new(n);
    cov.add_nodal("x", (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).expect("length n");
    cov.add_dyadic("w", DyadicMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))).expect("size n");
    cov
}

fn check(name: &str, errors: &[f64], tolerance: f64) -> CheckResult {
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    CheckResult {
        name: name.into(),
        cases: errors.len(),
        max_error,
        tolerance,
        passed: errors.iter().all(|e| *e <= tolerance),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rows(x: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|r| x.row(r).iter().copied().collect()).collect()
}

fn stats_checks(opts: VerifyOptions, out: &mut Vec<CheckResult>) -> Result<()> {
    let spec = ModelSpec::parse(FULL_FORMULA)?;
    let mut rng = rng_stream(0x5EED, 1);
    let (mut eval_err, mut change_err) = (Vec::new(), Vec::new());
    for case in 0..40 {
        let n = 3 + case % 6;
        let net = random_network(n, rng.random_range(0.1..0.6), &mut rng);
        let cov = random_covariates(n, &mut rng);
        let mut fast = eval_stats(&spec, &net, &cov)?.0;
        if let Some(c) = opts.corrupt_statistic {
            fast[0] += c;
        }
        let slow = brute_stats(&spec, &net, &cov)?.values;
        eval_err.push(max_abs_diff(&fast, &slow));
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let mut with = net.clone();
        with.set_edge(i, j, true);
        let mut without = net.clone();
        without.set_edge(i, j, false);
        let brute: Vec<f64> = brute_stats(&spec, &with, &cov)?
            .values
            .iter()
            .zip(brute_stats(&spec, &without, &cov)?.values)
            .map(|(a, b)| a - b)
            .collect();
        let delta = change_stats(&spec, &net, &cov, DyadIndex::new(i, j, n)?)?.0;
        change_err.push(max_abs_diff(&delta, &brute));
    }
    out.push(check("eval_stats = brute_stats", &eval_err, 1e-12));
    out.push(check("change_stats = brute difference", &change_err, 1e-12));
    Ok(())
}

fn enumeration_check(out: &mut Vec<CheckResult>) -> Result<()> {
    let spec = ModelSpec::parse("edges + mutual + edgecov(w) + gwidegree + gwesp(otp)")?;
    let mut rng = rng_stream(0x5EED, 2);
    let mut err = Vec::new();
    for n in [3, 3, 4] {
        let cov = random_covariates(n, &mut rng);
        let theta: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = enumerate_exact(&spec, &cov, &theta, n, false)?.log_kappa;
        let slow = brute_log_kappa(&spec, &cov, &theta, n)?.values[0];
        err.push((fast - slow).abs() / slow.abs().max(1.0));
    }
    out.push(check("enumerate_exact = brute enumeration", &err, 1e-10));
    Ok(())
}

fn glm_checks(out: &mut Vec<CheckResult>) -> Result<()> {
    let mut rng = rng_stream(0x5EED, 3);
    let (mut mple_err, mut probit_err) = (Vec::new(), Vec::new());
    for _ in 0..3 {
        let n = 12;
        let net = random_network(n, 0.3, &mut rng);
        let cov = random_covariates(n, &mut rng);
        let spec = ModelSpec::parse("edges + nodeocov(x) + edgecov(w)")?;
        let mple = fit_mple(&spec, &net, &cov)?;
        let (x, y) = mple_design(&spec, &net, &cov)?;
        let oracle = glm_irls(&rows(&x), &y, OracleLink::Logit)?;
        mple_err.push(max_abs_diff(&mple.theta, &oracle.values));

        let ame = AmeSpec { sender_covariates: vec!["x".into()], dyadic_covariates: vec!["w".into()], ..AmeSpec::default() };
        let probit = fit_probit(&ame, &net, &cov)?;
        let design = DyadDesign::new(&ame, &cov, n)?;
        let oracle = glm_irls(&rows(&design.x), &y, OracleLink::Probit)?;
        probit_err.push(max_abs_diff(&probit.fit.coefficients, &oracle.values));
    }
    out.push(check("fit_mple = IRLS logit", &mple_err, 1e-6));
    out.push(check("fit_probit = IRLS probit", &probit_err, 1e-6));
    Ok(())
}

fn auc_check(out: &mut Vec<CheckResult>) -> Result<()> {
    let mut rng = rng_stream(0x5EED, 4);
    let mut err = Vec::new();
    for _ in 0..200 {
        let m = rng.random_range(2..40);
        let mut labels: Vec<bool> = (0..m).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        // coarse scores so that ties occur
        let scores: Vec<f64> = (0..m).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let fast = curves(&labels, &scores)?.auc_roc;
        let slow = pair_auc(&labels, &scores)?.values[0];
        err.push(if fast == slow { 0.0 } else { (fast - slow).abs().max(f64::MIN_POSITIVE) });
    }
    out.push(check("curves AUC = pair count", &err, 0.0));
    Ok(())
}

/// Runs every agreement check. Errors from the code under test are
/// propagated; disagreements are reported as failed checks.
pub fn run_verify(opts: VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    stats_checks(opts, &mut checks)?;
    enumeration_check(&mut checks)?;
    glm_checks(&mut checks)?;
    auc_check(&mut checks)?;
    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        let r = run_verify(VerifyOptions::default()).unwrap();
        for c in &r.checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn corruption_is_caught() {
        let r = run_verify(VerifyOptions { corrupt_statistic: Some(1e-9) }).unwrap();
        assert!(!r.all_passed());
        assert!(!r.checks[0].passed);
    }
}
