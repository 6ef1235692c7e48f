//! Binary directed networks.
//!
//! The adjacency matrix is stored densely with the diagonal structurally
//! absent: every accessor rejects `(i, i)`. In- and out-degrees and the edge
//! count are maintained incrementally so that toggling a dyad is O(1).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered pair of distinct node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadIndex {
    pub i: usize,
    pub j: usize,
}

impl DyadIndex {
    pub fn new(i: usize, j: usize, n: usize) -> Result<Self> {
        if i == j || i >= n || j >= n {
            return Err(Error::InvalidDyad { i, j, n });
        }
        Ok(DyadIndex { i, j })
    }

    /// The same pair with direction reversed.
    pub fn reversed(self) -> Self {
        DyadIndex { i: self.j, j: self.i }
    }
}

/// Iterates over all `n(n-1)` ordered dyads in row-major order.
pub fn dyads(n: usize) -> impl Iterator<Item = DyadIndex> {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| DyadIndex { i, j }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedNetwork {
    labels: Vec<String>,
    adjacency: Vec<bool>,
    in_degree: Vec<usize>,
    out_degree: Vec<usize>,
    edge_count: usize,
}

impl DirectedNetwork {
    /// An edgeless network over the given node labels.
    pub fn empty(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::TooFewNodes(n));
        }
        let mut seen = HashMap::with_capacity(n);
        for (idx, label) in labels.iter().enumerate() {
            if seen.insert(label.as_str(), idx).is_some() {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(DirectedNetwork {
            labels,
            adjacency: vec![false; n * n],
            in_degree: vec![0; n],
            out_degree: vec![0; n],
            edge_count: 0,
        })
    }

    /// An edgeless network with labels `1..=n`.
    pub fn with_size(n: usize) -> Result<Self> {
        Self::empty((1..=n).map(|k| k.to_string()).collect())
    }

    /// Builds a network with labels `1..=n` from 0-based `(src, dst)` index pairs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut net = Self::with_size(n)?;
        for &(i, j) in edges {
            DyadIndex::new(i, j, n)?;
            net.set_edge(i, j, true);
        }
        Ok(net)
    }

    /// The complete directed network on `n` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        let mut net = Self::with_size(n)?;
        for d in dyads(n) {
            net.set_edge(d.i, d.j, true);
        }
        Ok(net)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Whether the tie `i -> j` is present.
    ///
    /// Panics on the diagonal; use [`DirectedNetwork::try_edge`] for a
    /// fallible variant.
    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> bool {
        assert!(i != j, "diagonal entry ({i}, {i}) is structurally absent");
        self.adjacency[i * self.n() + j]
    }

    pub fn try_edge(&self, i: usize, j: usize) -> Result<bool> {
        DyadIndex::new(i, j, self.n())?;
        Ok(self.adjacency[i * self.n() + j])
    }

    /// Sets dyad `(i, j)`; returns the previous value.
    pub fn set_edge(&mut self, i: usize, j: usize, value: bool) -> bool {
        assert!(i != j, "diagonal entry ({i}, {i}) is structurally absent");
        let n = self.n();
        let slot = &mut self.adjacency[i * n + j];
        let old = *slot;
        if old != value {
            *slot = value;
            if value {
                self.out_degree[i] += 1;
                self.in_degree[j] += 1;
                self.edge_count += 1;
            } else {
                self.out_degree[i] -= 1;
                self.in_degree[j] -= 1;
                self.edge_count -= 1;
            }
        }
        old
    }

    /// Flips dyad `(i, j)`; returns the new value.
    pub fn toggle(&mut self, i: usize, j: usize) -> bool {
        let new = !self.edge(i, j);
        self.set_edge(i, j, new);
        new
    }

    #[inline]
    pub fn in_degree(&self, j: usize) -> usize {
        self.in_degree[j]
    }

    #[inline]
    pub fn out_degree(&self, i: usize) -> usize {
        self.out_degree[i]
    }

    pub fn in_degrees(&self) -> &[usize] {
        &self.in_degree
    }

    pub fn out_degrees(&self) -> &[usize] {
        &self.out_degree
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of ordered dyads, `n(n-1)`.
    pub fn dyad_count(&self) -> usize {
        let n = self.n();
        n * (n - 1)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        dyads(self.n()).filter(|d| self.edge(d.i, d.j)).map(|d| (d.i, d.j))
    }

    /// Edge count divided by the number of ordered dyads.
    pub fn density(&self) -> f64 {
        self.edge_count as f64 / self.dyad_count() as f64
    }

    /// Relabels nodes so that new node `k` is old node `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        check_permutation(perm, n)?;
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let mut out = Self::empty(labels)?;
        for a in 0..n {
            for b in 0..n {
                if a != b && self.edge(perm[a], perm[b]) {
                    out.set_edge(a, b, true);
                }
            }
        }
        Ok(out)
    }

    /// Clears every edge while keeping the node set.
    pub fn clear(&mut self) {
        self.adjacency.fill(false);
        self.in_degree.fill(0);
        self.out_degree.fill(0);
        self.edge_count = 0;
    }
}

/// Edge count over `n(n-1)` ordered dyads.
pub fn density(network: &DirectedNetwork) -> f64 {
    network.density()
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            what: "permutation".into(),
            expected: n,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidConfig(format!("not a permutation of 0..{n}")));
        }
        seen[p] = true;
    }
    Ok(())
}
