//! Read access to a network for statistic evaluation.
//!
//! [`TieView`] abstracts over a plain [`DirectedNetwork`], which counts shared
//! partners by scanning all nodes, and [`CachedNetwork`], which keeps the
//! two-path count matrices up to date under toggles so that a shared-partner
//! lookup is O(1) and a toggle is O(n).

use crate::network::DirectedNetwork;
use crate::stats::terms::EspVariant;

pub trait TieView {
    fn n(&self) -> usize;
    fn tie(&self, i: usize, j: usize) -> bool;
    fn in_degree(&self, j: usize) -> usize;
    fn out_degree(&self, i: usize) -> usize;
    /// Number of partners `h` of dyad `(a, b)` under `variant`. Does not
    /// depend on the state of `(a, b)` itself.
    fn partners(&self, variant: EspVariant, a: usize, b: usize) -> usize;
}

impl TieView for DirectedNetwork {
    fn n(&self) -> usize {
        DirectedNetwork::n(self)
    }

    #[inline]
    fn tie(&self, i: usize, j: usize) -> bool {
        self.edge(i, j)
    }

    fn in_degree(&self, j: usize) -> usize {
        DirectedNetwork::in_degree(self, j)
    }

    fn out_degree(&self, i: usize) -> usize {
        DirectedNetwork::out_degree(self, i)
    }

    fn partners(&self, variant: EspVariant, a: usize, b: usize) -> usize {
        let n = DirectedNetwork::n(self);
        (0..n)
            .filter(|&h| h != a && h != b)
            .filter(|&h| match variant {
                EspVariant::Otp => self.edge(a, h) && self.edge(h, b),
                EspVariant::Isp => self.edge(h, a) && self.edge(h, b),
                EspVariant::Osp => self.edge(a, h) && self.edge(b, h),
                EspVariant::Itp => self.edge(h, a) && self.edge(b, h),
            })
            .count()
    }
}

/// A network with incrementally maintained two-path counts.
///
/// - `two_path[a][b]  = #{h : a -> h -> b}` (OTP, and ITP transposed)
/// - `in_shared[a][b] = #{h : h -> a, h -> b}` (ISP)
/// - `out_shared[a][b] = #{h : a -> h, b -> h}` (OSP)
///
/// Only the matrices requested at construction are kept.
#[derive(Debug, Clone)]
pub struct CachedNetwork {
    net: DirectedNetwork,
    two_path: Option<Vec<u32>>,
    in_shared: Option<Vec<u32>>,
    out_shared: Option<Vec<u32>>,
}

impl CachedNetwork {
    /// Builds caches for the variants flagged in `needs` (indexed as [`EspVariant::ALL`]).
    pub fn new(net: DirectedNetwork, needs: [bool; 4]) -> Self {
        let n = net.n();
        let build = |f: &dyn Fn(usize, usize, usize) -> bool| {
            let mut m = vec![0u32; n * n];
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        m[a * n + b] = (0..n).filter(|&h| h != a && h != b && f(a, b, h)).count() as u32;
                    }
                }
            }
            m
        };
        let two_path = (needs[0] || needs[3]).then(|| build(&|a, b, h| net.edge(a, h) && net.edge(h, b)));
        let in_shared = needs[1].then(|| build(&|a, b, h| net.edge(h, a) && net.edge(h, b)));
        let out_shared = needs[2].then(|| build(&|a, b, h| net.edge(a, h) && net.edge(b, h)));
        CachedNetwork { net, two_path, in_shared, out_shared }
    }

    pub fn network(&self) -> &DirectedNetwork {
        &self.net
    }

    pub fn into_network(self) -> DirectedNetwork {
        self.net
    }

    /// Flips dyad `(i, j)` and updates the caches; returns the new value.
    pub fn toggle(&mut self, i: usize, j: usize) -> bool {
        let n = self.net.n();
        let added = self.net.toggle(i, j);
        let apply = |m: &mut Vec<u32>, idx: usize| {
            if added {
                m[idx] += 1;
            } else {
                m[idx] -= 1;
            }
        };
        let net = &self.net;
        if let Some(m) = self.two_path.as_mut() {
            // i -> j -> b contributes to (i, b); a -> i -> j contributes to (a, j).
            for b in 0..n {
                if b != i && b != j && net.edge(j, b) {
                    apply(m, i * n + b);
                }
            }
            for a in 0..n {
                if a != i && a != j && net.edge(a, i) {
                    apply(m, a * n + j);
                }
            }
        }
        if let Some(m) = self.in_shared.as_mut() {
            // i -> j and i -> b: partner i for (j, b) and (b, j).
            for b in 0..n {
                if b != i && b != j && net.edge(i, b) {
                    apply(m, j * n + b);
                    apply(m, b * n + j);
                }
            }
        }
        if let Some(m) = self.out_shared.as_mut() {
            // i -> j and b -> j: partner j for (i, b) and (b, i).
            for b in 0..n {
                if b != i && b != j && net.edge(b, j) {
                    apply(m, i * n + b);
                    apply(m, b * n + i);
                }
            }
        }
        added
    }
}

impl TieView for CachedNetwork {
    fn n(&self) -> usize {
        self.net.n()
    }

    #[inline]
    fn tie(&self, i: usize, j: usize) -> bool {
        self.net.edge(i, j)
    }

    fn in_degree(&self, j: usize) -> usize {
        self.net.in_degree(j)
    }

    fn out_degree(&self, i: usize) -> usize {
        self.net.out_degree(i)
    }

    fn partners(&self, variant: EspVariant, a: usize, b: usize) -> usize {
        let n = self.net.n();
        let cached = match variant {
            EspVariant::Otp => self.two_path.as_ref().map(|m| m[a * n + b]),
            EspVariant::Itp => self.two_path.as_ref().map(|m| m[b * n + a]),
            EspVariant::Isp => self.in_shared.as_ref().map(|m| m[a * n + b]),
            EspVariant::Osp => self.out_shared.as_ref().map(|m| m[a * n + b]),
        };
        match cached {
            Some(c) => c as usize,
            None => self.net.partners(variant, a, b),
        }
    }
}
