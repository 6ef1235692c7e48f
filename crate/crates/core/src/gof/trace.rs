//! Convergence diagnostics for MCMC output.

use serde::{Deserialize, Serialize};

use crate::ame::AmePosterior;
use crate::error::{Error, Result};
use crate::numeric::{effective_sample_size, mean};

pub const MIN_TRACE_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDiagnostics {
    pub parameter: String,
    pub ess: f64,
    pub split_rhat: f64,
    /// Within-chain least-squares slope per draw.
    pub slope: f64,
    /// Its standard error, inflated by `sqrt(N / ESS)` for autocorrelation.
    pub slope_se: f64,
    /// `|slope| > 2 slope_se`.
    pub trend_flag: bool,
}

fn split<'a>(values: &'a [f64], chain_lengths: &[usize]) -> Vec<&'a [f64]> {
    let mut out = Vec::new();
    let mut start = 0;
    for &len in chain_lengths {
        let c = &values[start..start + len];
        out.push(c);
        start += len;
    }
    out
}

/// Gelman-Rubin ratio over the first and second half of every chain.
fn split_rhat(chains: &[&[f64]]) -> f64 {
    let halves: Vec<&[f64]> =
        chains.iter().flat_map(|c| [&c[..c.len() / 2], &c[c.len() - c.len() / 2..]]).filter(|h| h.len() >= 2).collect();
    let len = halves.iter().map(|h| h.len()).min().unwrap_or(0);
    if halves.len() < 2 || len < 2 {
        return f64::NAN;
    }
    let n = len as f64;
    let means: Vec<f64> = halves.iter().map(|h| mean(&h[..len])).collect();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, m)| h[..len].iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / halves.len() as f64;
    let grand = mean(&means);
    let b_over_n = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    if w == 0.0 {
        return if b_over_n == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((n - 1.0) / n * w + b_over_n) / w).sqrt()
}

/// Diagnostics for one parameter; `values` holds the chains back to back.
pub fn chain_diagnostics(parameter: &str, values: &[f64], chain_lengths: &[usize]) -> Result<TraceDiagnostics> {
    if values.len() < MIN_TRACE_DRAWS {
        return Err(Error::TooFewDraws { got: values.len(), need: MIN_TRACE_DRAWS });
    }
    if chain_lengths.iter().sum::<usize>() != values.len() {
        return Err(Error::DimensionMismatch {
            what: "chain lengths".into(),
            expected: values.len(),
            got: chain_lengths.iter().sum(),
        });
    }
    let chains = split(values, chain_lengths);
    let ess: f64 = chains.iter().map(|c| effective_sample_size(c)).sum();

    // slope on the within-chain index with a separate intercept per chain
    let (mut sxy, mut sxx, mut rss_parts) = (0.0, 0.0, Vec::new());
    for c in &chains {
        let tm = (c.len() as f64 - 1.0) / 2.0;
        let ym = mean(c);
        for (t, y) in c.iter().enumerate() {
            sxy += (t as f64 - tm) * (y - ym);
            sxx += (t as f64 - tm).powi(2);
        }
        rss_parts.push((tm, ym));
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mut rss = 0.0;
    for (c, (tm, ym)) in chains.iter().zip(&rss_parts) {
        for (t, y) in c.iter().enumerate() {
            rss += (y - ym - slope * (t as f64 - tm)).powi(2);
        }
    }
    let dof = (values.len() - chains.len() - 1).max(1) as f64;
    let n = values.len() as f64;
    let slope_se = if sxx > 0.0 { (rss / dof / sxx).sqrt() * (n / ess.max(1.0)).sqrt() } else { 0.0 };
    Ok(TraceDiagnostics {
        parameter: parameter.to_string(),
        ess,
        split_rhat: split_rhat(&chains),
        slope,
        slope_se,
        trend_flag: slope.abs() > 2.0 * slope_se,
    })
}

/// [`chain_diagnostics`] for every scalar parameter of an AME posterior.
pub fn trace_diagnostics(posterior: &AmePosterior) -> Result<Vec<TraceDiagnostics>> {
    posterior
        .scalar_names()
        .iter()
        .enumerate()
        .map(|(k, name)| chain_diagnostics(name, &posterior.scalar_chain(k), &posterior.chain_lengths))
        .collect()
}
