//! Shared first-principles oracles for the integration suites.
//!
//! Everything here is written against dense `num_complex` matrices from the
//! definitions alone, deliberately sharing no code with the library's sparse
//! split-plane implementations.

#![allow(dead_code)]

use mapdg_core::dense::{CMat, Mat};
use mapdg_core::encoding::{compute_centralities, edge_scorer_inputs};
use mapdg_core::graph::Digraph;
use mapdg_core::magnetic::{
    assemble_star_mgo, build_symmetric_norm, propagate, EdgePhaseAssignment,
};
use mapdg_core::model::{
    attention_backward, attention_forward, cross_entropy_masked, edge_q_backward, edge_q_forward,
    LinearGrads, MlpGrads, ModelState,
};
use num_complex::Complex64;
use rand::prelude::*;

pub type DenseC = Vec<Vec<Complex64>>;

/// 0/1 adjacency with self-loops dropped, as the graph type stores edges.
pub fn dense_adjacency(g: &Digraph<f64>) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in g.edges() {
        a[u][v] = 1.0;
    }
    a
}

/// Phase-modulated symmetric-normalized operator built densely from the
/// definitions: `w = (0.5(A + A^T) + I)` normalized by row sums, times
/// `exp(i * 2*pi*q_uv * (A_uv - A_vu))`.
pub fn dense_mgo(g: &Digraph<f64>, q_pairs: &[f64]) -> DenseC {
    let n = g.n();
    let a = dense_adjacency(g);
    let mut atilde = vec![vec![0.0; n]; n];
    for u in 0..n {
        for v in 0..n {
            atilde[u][v] = 0.5 * (a[u][v] + a[v][u]);
        }
        atilde[u][u] += 1.0;
    }
    let deg: Vec<f64> = (0..n).map(|u| atilde[u].iter().sum()).collect();

    // canonical pair -> q lookup, mirroring the library's pair ordering
    let mut q_of = std::collections::HashMap::new();
    for ((u, v, _), &q) in g.undirected_pairs().into_iter().zip(q_pairs) {
        q_of.insert((u, v), q);
        q_of.insert((v, u), q);
    }

    let mut h = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for u in 0..n {
        for v in 0..n {
            if atilde[u][v] == 0.0 {
                continue;
            }
            let w = atilde[u][v] / (deg[u] * deg[v]).sqrt();
            let q = if u == v { 0.0 } else { *q_of.get(&(u, v)).unwrap_or(&0.0) };
            let theta = 2.0 * std::f64::consts::PI * q * (a[u][v] - a[v][u]);
            h[u][v] = Complex64::from_polar(w, theta);
        }
    }
    h
}

pub fn dense_matvec_block(h: &DenseC, x: &DenseC) -> DenseC {
    let n = h.len();
    let f = x[0].len();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); f]; n];
    for u in 0..n {
        for v in 0..n {
            let hv = h[u][v];
            if hv.re == 0.0 && hv.im == 0.0 {
                continue;
            }
            for c in 0..f {
                y[u][c] += hv * x[v][c];
            }
        }
    }
    y
}

pub fn dense_from_real(x: &Mat<f64>) -> DenseC {
    (0..x.rows())
        .map(|r| x.row(r).iter().map(|&v| Complex64::new(v, 0.0)).collect())
        .collect()
}

/// `[X, HX, H^2 X, ...]` up to `k` applications.
pub fn dense_propagate(h: &DenseC, x: &Mat<f64>, k: usize) -> Vec<DenseC> {
    let mut steps = vec![dense_from_real(x)];
    for _ in 0..k {
        let next = dense_matvec_block(h, steps.last().unwrap());
        steps.push(next);
    }
    steps
}

pub fn max_abs_diff_step(step: &CMat<f64>, dense: &DenseC) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..step.rows() {
        for c in 0..step.cols() {
            let d = Complex64::new(step.re.get(r, c), step.im.get(r, c)) - dense[r][c];
            worst = worst.max(d.norm());
        }
    }
    worst
}

/// Closed directed triples per node straight from the matrix formula:
/// augmented adjacency `At` (self-loop on each node missing in- or
/// out-edges), `motifs[v] = sum_u (At^2)[v][u] * At[u][v]`.
pub fn dense_motifs(g: &Digraph<f64>) -> Vec<u64> {
    let n = g.n();
    let mut at = vec![vec![0u64; n]; n];
    for &(u, v) in g.edges() {
        at[u][v] = 1;
    }
    for v in 0..n {
        let d_out: u64 = at[v].iter().sum();
        let d_in: u64 = (0..n).map(|u| at[u][v]).sum();
        if d_in == 0 || d_out == 0 {
            at[v][v] = 1;
        }
    }
    (0..n)
        .map(|v| {
            let mut total = 0u64;
            for u in 0..n {
                if at[u][v] == 0 {
                    continue;
                }
                let walks: u64 = (0..n).map(|w| at[v][w] * at[w][u]).sum();
                total += walks;
            }
            total
        })
        .collect()
}

/// Random digraph with `n` in `[n_lo, n_hi]`, edge probability tuned to a
/// few neighbors per node, and small random features.
pub fn random_digraph(rng: &mut impl Rng, n_lo: usize, n_hi: usize, f_hi: usize) -> Digraph<f64> {
    let n = rng.random_range(n_lo..=n_hi);
    let f = rng.random_range(1..=f_hi);
    let density = rng.random_range(0.5..3.0) / (n as f64);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random::<f64>() < density {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        let u = rng.random_range(0..n);
        let v = (u + 1) % n;
        edges.push((u, v));
    }
    let mut feats = Mat::zeros(n, f);
    for v in feats.data_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    Digraph::new(&edges, feats).unwrap().0
}

pub fn random_pair_q(rng: &mut impl Rng, g: &Digraph<f64>) -> Vec<f64> {
    (0..g.undirected_pairs().len()).map(|_| rng.random_range(0.0..=0.25)).collect()
}

/// Full adaptive forward pass for the node task: scorer -> potentials ->
/// operator -> propagation -> attention -> update -> masked cross-entropy.
/// This is the path where gradients must flow through the propagated
/// features back into the edge scorer.
pub fn adaptive_loss(
    state: &ModelState<f64>,
    g: &Digraph<f64>,
    inputs: &Mat<f64>,
    labels: &[usize],
    mask: &[usize],
    k: usize,
) -> f64 {
    let (q, _) = edge_q_forward(&state.edge_scorer, inputs);
    let phases = EdgePhaseAssignment::new(g, q).unwrap();
    let norm = build_symmetric_norm(g);
    let mgo = assemble_star_mgo(&norm, &phases).unwrap();
    let stack = propagate(&mgo, g.features(), k).unwrap();
    let (h, _) = attention_forward(&state.att_scorer, &stack);
    let logits = state.update.forward(&h);
    let (loss, _) = cross_entropy_masked(&logits, labels, mask).unwrap();
    loss
}

/// Analytic gradients along the same path, grouped per parameter block.
pub fn adaptive_grads(
    state: &ModelState<f64>,
    g: &Digraph<f64>,
    inputs: &Mat<f64>,
    labels: &[usize],
    mask: &[usize],
    k: usize,
) -> (MlpGrads<f64>, MlpGrads<f64>, LinearGrads<f64>) {
    let (q, qcache) = edge_q_forward(&state.edge_scorer, inputs);
    let phases = EdgePhaseAssignment::new(g, q).unwrap();
    let norm = build_symmetric_norm(g);
    let mgo = assemble_star_mgo(&norm, &phases).unwrap();
    let stack = propagate(&mgo, g.features(), k).unwrap();
    let (h, att_cache) = attention_forward(&state.att_scorer, &stack);
    let logits = state.update.forward(&h);
    let (_, dlogits) = cross_entropy_masked(&logits, labels, mask).unwrap();
    let (update_grads, dh) = state.update.backward(&h, &dlogits);
    let (att_grads, dsteps) = attention_backward(&state.att_scorer, &stack, &att_cache, &dh);
    let (d_re, d_im) = mapdg_core::model::propagation_backward(&mgo, &stack, &dsteps);
    let dq = mapdg_core::model::q_pair_gradient(&mgo, &phases, &d_re, &d_im);
    let edge_grads = edge_q_backward(&state.edge_scorer, inputs, &qcache, &dq);
    (edge_grads, att_grads, update_grads)
}

/// Neutral-feature scorer inputs for a graph, as used at strategy
/// initialization.
pub fn neutral_scorer_inputs(g: &Digraph<f64>) -> Mat<f64> {
    let pairs: Vec<(usize, usize)> =
        g.undirected_pairs().into_iter().map(|(u, v, _)| (u, v)).collect();
    let cent = compute_centralities(g);
    let ones = vec![1.0; pairs.len()];
    edge_scorer_inputs(&cent, &pairs, &ones)
}
