//! Directed triple-motif counts and the local clustering coefficient.

use crate::graph::{DegreeStats, Digraph};
use crate::scalar::Scalar;

/// Per-node motif tallies on the sink-augmented adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifStats<T> {
    /// `motifs[v]` = number of ordered walks `v -> w -> u` (in the augmented
    /// adjacency) that close with an edge `u -> v`; this is the row sum of
    /// `(A~^2 ∘ A~^T)` at `v`.
    pub motifs: Vec<u64>,
    /// `motifs[v] / (d~_in(v) * d~_out(v))` with augmented degrees.
    pub local_coeff: Vec<T>,
}

/// Counts closed directed triples through each node.
///
/// The augmented adjacency is the edge set plus a self-loop on every node
/// with zero in- or out-degree, so the denominator degrees are never zero.
pub fn count_motifs<T: Scalar>(g: &Digraph<T>, deg: &DegreeStats) -> MotifStats<T> {
    let n = g.n();
    let aug_has = |u: usize, v: usize| -> bool {
        if u == v {
            deg.sink_loops[u]
        } else {
            g.has_edge(u, v)
        }
    };
    let mut motifs = vec![0u64; n];
    let walk = |v: usize, w: usize, count: &mut u64| {
        // second hop w -> u, then the closing edge u -> v
        for &u in g.out_neighbors(w) {
            if aug_has(u, v) {
                *count += 1;
            }
        }
        if deg.sink_loops[w] && aug_has(w, v) {
            *count += 1;
        }
    };
    for v in 0..n {
        let mut count = 0u64;
        for &w in g.out_neighbors(v) {
            walk(v, w, &mut count);
        }
        if deg.sink_loops[v] {
            walk(v, v, &mut count);
        }
        motifs[v] = count;
    }
    let local_coeff = (0..n)
        .map(|v| T::c(motifs[v] as f64) / T::c((deg.aug_in(v) * deg.aug_out(v)) as f64))
        .collect();
    MotifStats { motifs, local_coeff }
}
