use serde::{Deserialize, Serialize};

use crate::numeric::{quantile_sorted, sorted};

/// Observed value of one statistic bin against its simulated distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofBin {
    pub family: String,
    pub bin: String,
    pub observed: f64,
    pub q01: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q99: f64,
    pub min: f64,
    pub max: f64,
    /// Observed value outside the simulated `[min, max]`.
    pub outside: bool,
}

impl GofBin {
    pub fn new(family: impl Into<String>, bin: impl Into<String>, observed: f64, simulated: &[f64]) -> Self {
        let s = sorted(simulated);
        let q = |p| quantile_sorted(&s, p);
        let (min, max) = (s[0], s[s.len() - 1]);
        GofBin {
            family: family.into(),
            bin: bin.into(),
            observed,
            q01: q(0.01),
            q25: q(0.25),
            q50: q(0.5),
            q75: q(0.75),
            q99: q(0.99),
            min,
            max,
            outside: observed < min || observed > max,
        }
    }

    /// Observed value inside the central 98% band `[q01, q99]`.
    pub fn inside_central(&self) -> bool {
        self.q01 <= self.observed && self.observed <= self.q99
    }

    pub fn quantiles_monotone(&self) -> bool {
        let q = [self.min, self.q01, self.q25, self.q50, self.q75, self.q99, self.max];
        q.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Share of bins whose observed value lies within the simulated range.
pub fn share_inside(bins: &[GofBin]) -> f64 {
    if bins.is_empty() {
        return 1.0;
    }
    bins.iter().filter(|b| !b.outside).count() as f64 / bins.len() as f64
}
