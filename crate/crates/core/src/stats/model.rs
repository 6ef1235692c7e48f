//! Statistic evaluation with covariates resolved up front.

use crate::covariates::{CovariateSet, DyadicMatrix};
use crate::error::{Error, Result};
use crate::stats::terms::{EspVariant, ModelSpec, TermKind};
use crate::stats::view::TieView;

#[derive(Debug, Clone, Copy)]
struct Geometric {
    /// `exp(decay)`
    scale: f64,
    /// `log(1 - exp(-decay))`
    log_ratio: f64,
}

impl Geometric {
    fn new(decay: f64) -> Self {
        Geometric { scale: decay.exp(), log_ratio: (-(-decay).exp()).ln_1p() }
    }

    /// Contribution of one node (or edge) with count `k`: `e^a (1 - r^k)`.
    #[inline]
    fn weight(self, k: usize) -> f64 {
        // expm1 keeps large decays accurate, where 1 - r^k cancels
        -self.scale * (k as f64 * self.log_ratio).exp_m1()
    }

    /// Increment when a count goes from `k` to `k + 1`, which is `r^k`.
    #[inline]
    fn step(self, k: usize) -> f64 {
        (k as f64 * self.log_ratio).exp()
    }
}

#[derive(Debug, Clone, Copy)]
enum Bound<'a> {
    Edges,
    Mutual,
    NodeOut(&'a [f64]),
    NodeIn(&'a [f64]),
    EdgeCov(&'a DyadicMatrix),
    AbsDiff(&'a [f64]),
    GwIn(Geometric),
    GwOut(Geometric),
    GwEsp(EspVariant, Geometric),
    InCount(usize),
    OutCount(usize),
}

/// A [`ModelSpec`] bound to a covariate set and a node count.
#[derive(Debug, Clone)]
pub struct BoundModel<'a> {
    terms: Vec<Bound<'a>>,
    n: usize,
}

impl<'a> BoundModel<'a> {
    pub fn new(spec: &ModelSpec, covariates: &'a CovariateSet, n: usize) -> Result<Self> {
        if covariates.n() != n && spec.terms().iter().any(|t| t.kind.covariate().is_some()) {
            return Err(Error::DimensionMismatch {
                what: "covariate set".into(),
                expected: n,
                got: covariates.n(),
            });
        }
        let terms = spec
            .terms()
            .iter()
            .map(|t| {
                Ok(match &t.kind {
                    TermKind::Edges => Bound::Edges,
                    TermKind::Mutual => Bound::Mutual,
                    TermKind::NodeOutCov(c) => Bound::NodeOut(covariates.nodal(c)?),
                    TermKind::NodeInCov(c) => Bound::NodeIn(covariates.nodal(c)?),
                    TermKind::EdgeCov(c) => Bound::EdgeCov(covariates.dyadic(c)?),
                    TermKind::AbsDiffCov(c) => Bound::AbsDiff(covariates.nodal(c)?),
                    TermKind::GwIdegree { decay } => Bound::GwIn(Geometric::new(*decay)),
                    TermKind::GwOdegree { decay } => Bound::GwOut(Geometric::new(*decay)),
                    TermKind::GwEsp { variant, decay } => Bound::GwEsp(*variant, Geometric::new(*decay)),
                    TermKind::IdegreeCount(k) | TermKind::OdegreeCount(k) if *k >= n => {
                        return Err(Error::InvalidTerm(format!(
                            "degree {k} out of range for a network with {n} nodes"
                        )))
                    }
                    TermKind::IdegreeCount(k) => Bound::InCount(*k),
                    TermKind::OdegreeCount(k) => Bound::OutCount(*k),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundModel { terms, n })
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Which shared-partner variants the model reads, indexed as [`EspVariant::ALL`].
    pub fn partner_needs(&self) -> [bool; 4] {
        let mut needs = [false; 4];
        for t in &self.terms {
            if let Bound::GwEsp(v, _) = t {
                needs[EspVariant::ALL.iter().position(|x| x == v).unwrap()] = true;
            }
        }
        needs
    }

    /// Full statistic vector `s(y)`.
    pub fn eval<V: TieView>(&self, y: &V) -> Vec<f64> {
        let n = y.n();
        let mut out = vec![0.0; self.terms.len()];
        let mut in_hist = vec![0usize; n];
        let mut out_hist = vec![0usize; n];
        for k in 0..n {
            in_hist[y.in_degree(k)] += 1;
            out_hist[y.out_degree(k)] += 1;
        }
        for (slot, term) in out.iter_mut().zip(&self.terms) {
            *slot = match *term {
                Bound::Edges => edge_sum(y, |_, _| 1.0),
                Bound::Mutual => {
                    let mut m = 0usize;
                    for i in 0..n {
                        for j in i + 1..n {
                            if y.tie(i, j) && y.tie(j, i) {
                                m += 1;
                            }
                        }
                    }
                    m as f64
                }
                Bound::NodeOut(x) => edge_sum(y, |i, _| x[i]),
                Bound::NodeIn(x) => edge_sum(y, |_, j| x[j]),
                Bound::EdgeCov(m) => edge_sum(y, |i, j| m.get(i, j)),
                Bound::AbsDiff(x) => edge_sum(y, |i, j| (x[i] - x[j]).abs()),
                Bound::GwIn(g) => (1..n).map(|k| g.weight(k) * in_hist[k] as f64).sum(),
                Bound::GwOut(g) => (1..n).map(|k| g.weight(k) * out_hist[k] as f64).sum(),
                Bound::GwEsp(v, g) => edge_sum(y, |i, j| g.weight(y.partners(v, i, j))),
                Bound::InCount(k) => in_hist[k] as f64,
                Bound::OutCount(k) => out_hist[k] as f64,
            };
        }
        out
    }

    /// Change statistic `s(y with (i,j)=1) - s(y with (i,j)=0)` written into `out`.
    pub fn change<V: TieView>(&self, y: &V, i: usize, j: usize, out: &mut [f64]) {
        debug_assert!(i != j);
        let present = y.tie(i, j);
        let own = present as usize;
        for (slot, term) in out.iter_mut().zip(&self.terms) {
            *slot = match *term {
                Bound::Edges => 1.0,
                Bound::Mutual => y.tie(j, i) as u8 as f64,
                Bound::NodeOut(x) => x[i],
                Bound::NodeIn(x) => x[j],
                Bound::EdgeCov(m) => m.get(i, j),
                Bound::AbsDiff(x) => (x[i] - x[j]).abs(),
                Bound::GwIn(g) => g.step(y.in_degree(j) - own),
                Bound::GwOut(g) => g.step(y.out_degree(i) - own),
                Bound::GwEsp(v, g) => esp_change(y, v, g, i, j, own),
                Bound::InCount(k) => count_change(y.in_degree(j) - own, k),
                Bound::OutCount(k) => count_change(y.out_degree(i) - own, k),
            };
        }
    }
}

#[inline]
fn count_change(without: usize, k: usize) -> f64 {
    (without + 1 == k) as u8 as f64 - (without == k) as u8 as f64
}

fn edge_sum<V: TieView>(y: &V, f: impl Fn(usize, usize) -> f64) -> f64 {
    let n = y.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && y.tie(i, j) {
                s += f(i, j);
            }
        }
    }
    s
}

/// Change in the GW shared-partner statistic when `(i, j)` switches on.
///
/// Two parts: the edge `(i, j)` itself enters with its own partner count,
/// and every existing edge that uses `(i, j)` as one leg of a partner
/// configuration gains one partner.
fn esp_change<V: TieView>(y: &V, v: EspVariant, g: Geometric, i: usize, j: usize, own: usize) -> f64 {
    let n = y.n();
    let mut delta = g.weight(y.partners(v, i, j));
    // `bump(a, b)`: edge (a, b) gains partner via leg (i, j); its count
    // without (i, j) is the current count minus the leg's own state.
    let mut bump = |a: usize, b: usize| delta += g.step(y.partners(v, a, b) - own);
    for h in 0..n {
        if h == i || h == j {
            continue;
        }
        match v {
            EspVariant::Otp => {
                // i -> j -> h supports edge i -> h; h -> i -> j supports edge h -> j.
                if y.tie(i, h) && y.tie(j, h) {
                    bump(i, h);
                }
                if y.tie(h, j) && y.tie(h, i) {
                    bump(h, j);
                }
            }
            EspVariant::Isp => {
                // i -> j, i -> h: partner i for edges j -> h and h -> j.
                if y.tie(j, h) && y.tie(i, h) {
                    bump(j, h);
                }
                if y.tie(h, j) && y.tie(i, h) {
                    bump(h, j);
                }
            }
            EspVariant::Osp => {
                // i -> j, h -> j: partner j for edges i -> h and h -> i.
                if y.tie(i, h) && y.tie(h, j) {
                    bump(i, h);
                }
                if y.tie(h, i) && y.tie(h, j) {
                    bump(h, i);
                }
            }
            EspVariant::Itp => {
                // ITP partner of edge a -> b is h with h -> a and b -> h.
                // Leg i -> j as (h -> a): edge j -> h with h -> i.
                if y.tie(j, h) && y.tie(h, i) {
                    bump(j, h);
                }
                // Leg i -> j as (b -> h): edge h -> i with j -> h.
                if y.tie(h, i) && y.tie(j, h) {
                    bump(h, i);
                }
            }
        }
    }
    delta
}
