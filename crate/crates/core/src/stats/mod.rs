//! ERGM sufficient statistics and change statistics.

mod model;
mod terms;
mod view;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

pub use model::BoundModel;
pub use terms::{EspVariant, ModelSpec, StatTerm, TermKind, DEFAULT_DECAY};
pub use view::{CachedNetwork, TieView};

use crate::covariates::CovariateSet;
use crate::error::Result;
use crate::network::{DirectedNetwork, DyadIndex};

/// Statistic values aligned to a [`ModelSpec`]'s term order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatVector(pub Vec<f64>);

impl Deref for StatVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Evaluates `s(y)`.
pub fn eval_stats(spec: &ModelSpec, network: &DirectedNetwork, covariates: &CovariateSet) -> Result<StatVector> {
    let model = BoundModel::new(spec, covariates, network.n())?;
    Ok(StatVector(model.eval(network)))
}

/// Evaluates the change statistic for toggling `dyad` on versus off.
pub fn change_stats(
    spec: &ModelSpec,
    network: &DirectedNetwork,
    covariates: &CovariateSet,
    dyad: DyadIndex,
) -> Result<StatVector> {
    DyadIndex::new(dyad.i, dyad.j, network.n())?;
    let model = BoundModel::new(spec, covariates, network.n())?;
    let mut out = vec![0.0; model.dim()];
    model.change(network, dyad.i, dyad.j, &mut out);
    Ok(StatVector(out))
}

/// Histogram over `k = 0..=n-2` of existing edges by their number of
/// shared partners under `variant`. Sums to the edge count.
pub fn esp_distribution(network: &DirectedNetwork, variant: EspVariant) -> Vec<u64> {
    let n = network.n();
    let mut hist = vec![0u64; n - 1];
    for (i, j) in network.edges() {
        hist[network.partners(variant, i, j)] += 1;
    }
    hist
}

/// In- and out-degree histograms over `k = 0..=n-1`; each sums to `n`.
pub fn degree_distributions(network: &DirectedNetwork) -> (Vec<u64>, Vec<u64>) {
    let n = network.n();
    let mut ins = vec![0u64; n];
    let mut outs = vec![0u64; n];
    for k in 0..n {
        ins[network.in_degree(k)] += 1;
        outs[network.out_degree(k)] += 1;
    }
    (ins, outs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariates::DyadicMatrix;
    use crate::network::dyads;
    use proptest::prelude::*;

    fn none() -> CovariateSet {
        CovariateSet::new(0)
    }

    fn spec(s: &str) -> ModelSpec {
        ModelSpec::parse(s).unwrap()
    }

    #[test]
    fn reciprocal_pair_edges_and_mutual() {
        let y = DirectedNetwork::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
        let s = eval_stats(&spec("edges + mutual"), &y, &none()).unwrap();
        assert_eq!(s.0, vec![2.0, 1.0]);
    }

    #[test]
    fn gwidegree_hand_value() {
        // In-degrees (1, 1, 2, 0): 2 * [(1 - 0.5) * 2 + (1 - 0.25) * 1] = 3.5.
        let y = DirectedNetwork::from_edges(4, &[(1, 0), (2, 1), (0, 2), (3, 2)]).unwrap();
        assert_eq!(y.in_degrees(), [1, 1, 2, 0]);
        let s = eval_stats(&spec("gwidegree"), &y, &none()).unwrap();
        // independent evaluation of the series over k
        let a = std::f64::consts::LN_2;
        let (ins, _) = degree_distributions(&y);
        let series: f64 =
            (1..4).map(|k| a.exp() * (1.0 - (1.0 - (-a).exp()).powi(k as i32)) * ins[k] as f64).sum();
        assert!((series - 3.5).abs() < 1e-12);
        assert!((s[0] - 3.5).abs() < 1e-12);
    }

    #[test]
    fn gwotp_hand_value() {
        // Edges 1->2, 1->3, 3->2: edge 1->2 has one OTP partner (3).
        let y = DirectedNetwork::from_edges(3, &[(0, 1), (0, 2), (2, 1)]).unwrap();
        let s = eval_stats(&spec("gwesp(otp)"), &y, &none()).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn esp_distribution_examples() {
        let y = DirectedNetwork::from_edges(3, &[(0, 1), (0, 2), (2, 1)]).unwrap();
        assert_eq!(esp_distribution(&y, EspVariant::Otp), vec![2, 1]);
        // 1 -> 3 and 1 -> 2: node 1 is an incoming shared partner of edge 3 -> 2
        assert_eq!(esp_distribution(&y, EspVariant::Isp), vec![2, 1]);
        let empty = DirectedNetwork::with_size(5).unwrap();
        for v in EspVariant::ALL {
            assert_eq!(esp_distribution(&empty, v), vec![0; 4]);
        }
    }

    #[test]
    fn degree_distribution_examples() {
        let (ins, outs) = degree_distributions(&DirectedNetwork::with_size(5).unwrap());
        assert_eq!(ins[0], 5);
        assert_eq!(outs[0], 5);
        let star = DirectedNetwork::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let (ins, outs) = degree_distributions(&star);
        assert_eq!(outs, vec![3, 0, 0, 1]);
        assert_eq!(ins, vec![1, 3, 0, 0]);
    }

    #[test]
    fn elementary_change_stats() {
        let y = DirectedNetwork::from_edges(3, &[(1, 0)]).unwrap();
        let sp = spec("edges + mutual");
        let d = |i, j| DyadIndex::new(i, j, 3).unwrap();
        assert_eq!(change_stats(&sp, &y, &none(), d(0, 1)).unwrap().0, vec![1.0, 1.0]);
        assert_eq!(change_stats(&sp, &y, &none(), d(0, 2)).unwrap().0, vec![1.0, 0.0]);
        assert!(change_stats(&sp, &y, &none(), DyadIndex { i: 1, j: 1 }).is_err());
    }

    #[test]
    fn degree_count_range_is_checked() {
        let y = DirectedNetwork::with_size(3).unwrap();
        assert!(eval_stats(&spec("idegree(2)"), &y, &none()).is_ok());
        assert!(eval_stats(&spec("idegree(3)"), &y, &none()).is_err());
    }

    #[test]
    fn unknown_covariate_is_an_error() {
        let y = DirectedNetwork::with_size(3).unwrap();
        let cov = CovariateSet::new(3);
        assert!(eval_stats(&spec("edges + nodeocov(gdp)"), &y, &cov).is_err());
    }

    #[test]
    fn p1_statistics() {
        // Edges + mutual + every degree count reproduces the p1 sufficient statistics.
        let y = DirectedNetwork::from_edges(4, &[(0, 1), (1, 0), (2, 3), (0, 3)]).unwrap();
        let sp = spec("edges + mutual + idegree(0) + idegree(1) + idegree(2) + idegree(3) + odegree(0) + odegree(1) + odegree(2) + odegree(3)");
        let s = eval_stats(&sp, &y, &none()).unwrap();
        assert_eq!(s[0], 4.0);
        assert_eq!(s[1], 1.0);
        assert_eq!(s[2..6].iter().sum::<f64>(), 4.0);
        assert_eq!(s[6..10].iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn gw_large_decay_tends_to_linear_counts() {
        // e^a (1 - (1 - e^-a)^k) -> k as a grows, so GWIDEG -> edge count.
        let y = DirectedNetwork::from_edges(5, &[(0, 1), (2, 1), (3, 1), (4, 0), (1, 2)]).unwrap();
        let s = eval_stats(&spec("gwidegree(30) + gwesp(otp,30) + edges"), &y, &none()).unwrap();
        assert!((s[0] - 5.0).abs() < 1e-6);
        let otp_total: u64 = esp_distribution(&y, EspVariant::Otp).iter().enumerate().map(|(k, c)| k as u64 * c).sum();
        assert!((s[1] - otp_total as f64).abs() < 1e-6);
    }

    #[test]
    fn gw_with_unit_degrees_counts_nodes() {
        // All in-degrees <= 1: only the k = 1 weight e^a (1 - (1 - e^-a)) = 1 contributes.
        let y = DirectedNetwork::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        for decay in [0.1, 0.5, 2.0] {
            let sp = ModelSpec::new(vec![TermKind::GwIdegree { decay }]).unwrap();
            let s = eval_stats(&sp, &y, &none()).unwrap();
            assert!((s[0] - 3.0).abs() < 1e-12);
        }
    }

    fn random_net(n: usize, bits: &[bool]) -> DirectedNetwork {
        let mut y = DirectedNetwork::with_size(n).unwrap();
        for (d, &b) in dyads(n).zip(bits) {
            y.set_edge(d.i, d.j, b);
        }
        y
    }

    proptest! {
        #[test]
        fn gwidegree_depends_only_on_histogram(n in 3usize..8, a in proptest::collection::vec(any::<bool>(), 56), perm_seed in any::<u64>()) {
            // Relabel receivers only: the in-degree histogram is preserved
            // but the network changes.
            let y = random_net(n, &a);
            let mut order: Vec<usize> = (0..n).collect();
            let mut s = perm_seed;
            for k in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(k, (s >> 33) as usize % (k + 1));
            }
            let (ins, _) = degree_distributions(&y);
            let mut z = DirectedNetwork::with_size(n).unwrap();
            // Build z with in-degree sequence permuted: node order[k] gets
            // in-degree of k using senders chosen deterministically.
            for (k, &target) in order.iter().enumerate() {
                let mut need = y.in_degree(k);
                for src in (0..n).filter(|&h| h != target) {
                    if need == 0 { break; }
                    z.set_edge(src, target, true);
                    need -= 1;
                }
            }
            prop_assert_eq!(degree_distributions(&z).0, ins);
            let sp = spec("gwidegree(0.4)");
            let sy = eval_stats(&sp, &y, &none()).unwrap();
            let sz = eval_stats(&sp, &z, &none()).unwrap();
            prop_assert_eq!(sy, sz);
        }

        #[test]
        fn endogenous_stats_are_permutation_invariant(n in 3usize..8, a in proptest::collection::vec(any::<bool>(), 56), perm in Just((0..7usize).collect::<Vec<_>>()).prop_shuffle()) {
            let y = random_net(n, &a);
            let perm: Vec<usize> = perm.into_iter().filter(|&p| p < n).collect();
            let z = y.permuted(&perm).unwrap();
            let sp = spec("edges + mutual + gwidegree + gwodegree + gwesp(otp) + gwesp(isp) + gwesp(osp) + gwesp(itp) + idegree(1) + odegree(2)");
            let sy = eval_stats(&sp, &y, &none()).unwrap();
            let sz = eval_stats(&sp, &z, &none()).unwrap();
            for (u, v) in sy.iter().zip(sz.iter()) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }

        #[test]
        fn esp_distribution_sums_to_edges(n in 2usize..8, a in proptest::collection::vec(any::<bool>(), 56)) {
            let y = random_net(n, &a);
            for v in EspVariant::ALL {
                prop_assert_eq!(esp_distribution(&y, v).iter().sum::<u64>(), y.edge_count() as u64);
            }
        }

        #[test]
        fn covariate_change_stats_are_exact_differences(n in 3usize..7, a in proptest::collection::vec(any::<bool>(), 42), xs in proptest::collection::vec(-16i32..16, 7)) {
            let y = random_net(n, &a);
            let mut cov = CovariateSet::new(n);
            cov.add_nodal("x", xs[..n].iter().map(|&v| v as f64 / 4.0).collect()).unwrap();
            cov.add_dyadic("d", DyadicMatrix::from_fn(n, |i, j| ((i * 3 + j) % 5) as f64 - 2.0)).unwrap();
            let sp = spec("edges + nodeocov(x) + nodeicov(x) + edgecov(d) + absdiff(x)");
            for d in dyads(n) {
                let mut on = y.clone();
                on.set_edge(d.i, d.j, true);
                let mut off = y.clone();
                off.set_edge(d.i, d.j, false);
                let hi = eval_stats(&sp, &on, &cov).unwrap();
                let lo = eval_stats(&sp, &off, &cov).unwrap();
                let ch = change_stats(&sp, &y, &cov, d).unwrap();
                for k in 0..sp.len() {
                    prop_assert_eq!(hi[k] - lo[k], ch[k]);
                }
            }
        }
    }
}
