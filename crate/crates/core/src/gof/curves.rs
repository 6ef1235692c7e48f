//! ROC and precision-recall curves for in-sample tie prediction.

use serde::{Deserialize, Serialize};

use crate::covariates::CovariateSet;
use crate::ergm::mple_design;
use crate::error::{Error, Result};
use crate::network::DirectedNetwork;
use crate::numeric::logistic;
use crate::stats::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub roc_points: Vec<(f64, f64)>,
    /// `(recall, precision)`, one point per distinct threshold after a
    /// leading `recall = 0` point carrying the first precision.
    pub pr_points: Vec<(f64, f64)>,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Sweeps the distinct score thresholds from high to low. Tied scores form
/// one step, so `auc_roc` is the concordance probability with ties counted
/// one half; it is accumulated in integers and exact up to one rounding.
pub fn curves(labels: &[bool], scores: &[f64]) -> Result<CurveReport> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch { what: "scores".into(), expected: labels.len(), got: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut fp) = (0u64, 0u64);
    let mut twice_area = 0u128;
    let mut roc = vec![(0.0, 0.0)];
    let mut pr = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        twice_area += (fp - fp0) as u128 * (tp + tp0) as u128;
        roc.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        let precision = tp as f64 / (tp + fp) as f64;
        if pr.is_empty() {
            pr.push((0.0, precision));
        }
        pr.push((tp as f64 / pos as f64, precision));
    }
    let auc_pr = pr.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
    Ok(CurveReport {
        roc_points: roc,
        pr_points: pr,
        auc_roc: twice_area as f64 / (2 * pos as u128 * neg as u128) as f64,
        auc_pr,
        positives: pos,
        negatives: neg,
    })
}

/// Full-conditional tie probabilities `logistic(theta' delta_ij)` given the
/// rest of the observed network, with the observed ties, in row-major dyad
/// order.
pub fn ergm_scores(
    theta: &[f64],
    spec: &ModelSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
) -> Result<(Vec<bool>, Vec<f64>)> {
    let (x, y) = mple_design(spec, network, covariates)?;
    let scores = (0..x.nrows()).map(|r| logistic(x.row(r).iter().zip(theta).map(|(a, b)| a * b).sum())).collect();
    Ok((y, scores))
}
