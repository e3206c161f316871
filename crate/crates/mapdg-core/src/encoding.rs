//! Adaptive per-pair magnetic potentials.
//!
//! The weight-free encoder combines a degree-entropy global centrality, a
//! motif-based local centrality, and a feature-angle term into one potential
//! per unordered pair: `q = 1/4 * q_topo * q_feat`. Scalar baselines derived
//! from graph statistics live here too.

use std::path::Path;

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::graph::{count_motifs, DegreeStats, Digraph};
use crate::magnetic::EdgePhaseAssignment;
use crate::scalar::{stable_mean, Scalar};

/// Per-node centrality vectors feeding the pair potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVectors<T> {
    /// Degree-entropy global centrality (non-negative orientation).
    pub gc: Vec<T>,
    /// Motif density local centrality.
    pub lc: Vec<T>,
}

/// Degree-entropy centrality over augmented degrees.
///
/// The natural form returned here is the negated entropy sum, which is
/// non-negative. `literal = true` flips the sign for comparison runs.
pub fn global_centrality<T: Scalar>(
    deg: &DegreeStats,
    aug_edge_count: usize,
    literal: bool,
) -> Vec<T> {
    let m = T::c(aug_edge_count as f64);
    let term = |count: usize| -> T {
        if count == 0 {
            return T::zero();
        }
        let p = T::c(count as f64) / m;
        p * p.ln()
    };
    (0..deg.n())
        .map(|v| {
            let s = term(deg.aug_in(v)) + term(deg.aug_out(v));
            if literal {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// Computes both centrality vectors for a graph.
pub fn compute_centralities<T: Scalar>(g: &Digraph<T>) -> CentralityVectors<T> {
    let deg = g.compute_degrees();
    let motifs = count_motifs(g, &deg);
    let gc = global_centrality(&deg, deg.aug_edge_count(g.m()), false);
    CentralityVectors { gc, lc: motifs.local_coeff }
}

/// `tanh(x / mean(x))` per value, with a permutation-invariant mean. A zero
/// mean (all values zero) maps everything to zero.
pub fn tanh_mean_norm<T: Scalar>(values: &[T]) -> Vec<T> {
    let mean = stable_mean(values);
    if mean == T::zero() {
        return vec![T::zero(); values.len()];
    }
    values.iter().map(|&v| (v / mean).tanh()).collect()
}

/// Topology potential per pair: normalized sum of endpoint centralities.
/// Values lie in `[0, 1)`.
pub fn q_topology<T: Scalar>(cent: &CentralityVectors<T>, pairs: &[(usize, usize)]) -> Vec<T> {
    let sums: Vec<T> = pairs
        .iter()
        .map(|&(u, v)| (cent.gc[u] + cent.gc[v]) + (cent.lc[u] + cent.lc[v]))
        .collect();
    tanh_mean_norm(&sums)
}

/// Feature potential plus its zero-norm diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct QFeature<T> {
    /// Angular disagreement per pair, in `[0, 1]`.
    pub q: Vec<T>,
    /// Number of zero-norm embedding rows encountered; such rows are
    /// treated as perfectly aligned (`q = 0`).
    pub zero_norm_rows: usize,
}

/// Normalized angle between endpoint embedding rows:
/// `q = (2/pi) * arccos(clamp(cos, 0, 1))`.
pub fn q_feature<T: Scalar>(z: &Mat<T>, pairs: &[(usize, usize)]) -> QFeature<T> {
    let n = z.rows();
    let norms: Vec<T> = (0..n)
        .map(|v| z.row(v).iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    let zero_norm_rows = norms.iter().filter(|&&x| x == T::zero()).count();
    let two_over_pi = T::c(2.0) / T::PI();
    let q = pairs
        .iter()
        .map(|&(u, v)| {
            let cos = if norms[u] == T::zero() || norms[v] == T::zero() {
                T::one()
            } else {
                let dot = z
                    .row(u)
                    .iter()
                    .zip(z.row(v))
                    .map(|(&a, &b)| a * b)
                    .sum::<T>();
                (dot / (norms[u] * norms[v])).max(T::zero()).min(T::one())
            };
            two_over_pi * cos.acos()
        })
        .collect();
    QFeature { q, zero_norm_rows }
}

/// Fully assembled potential components for every pair of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct QComponents<T> {
    pub pairs: Vec<(usize, usize)>,
    pub q_topo: Vec<T>,
    pub q_feat: Vec<T>,
    pub q_star: Vec<T>,
}

impl<T: Scalar> QComponents<T> {
    /// Validates component ranges and multiplies into `q = t * f / 4`.
    pub fn assemble(
        pairs: Vec<(usize, usize)>,
        q_topo: Vec<T>,
        q_feat: Vec<T>,
    ) -> Result<Self> {
        if q_topo.len() != pairs.len() || q_feat.len() != pairs.len() {
            return Err(Error::Shape("component lengths must match pair count".into()));
        }
        for (i, &t) in q_topo.iter().enumerate() {
            if !(t >= T::zero() && t < T::one()) {
                return Err(Error::Range(format!("q_topo[{i}] = {t} outside [0, 1)")));
            }
        }
        for (i, &f) in q_feat.iter().enumerate() {
            if !(f >= T::zero() && f <= T::one()) {
                return Err(Error::Range(format!("q_feat[{i}] = {f} outside [0, 1]")));
            }
        }
        let quarter = T::c(0.25);
        let q_star = q_topo
            .iter()
            .zip(&q_feat)
            .map(|(&t, &f)| quarter * t * f)
            .collect();
        Ok(Self { pairs, q_topo, q_feat, q_star })
    }

    pub fn to_phases(&self, g: &Digraph<T>) -> Result<EdgePhaseAssignment<T>> {
        EdgePhaseAssignment::new(g, self.q_star.clone())
    }
}

/// Weight-free adaptive encoding of a graph.
///
/// Without soft labels the feature term is neutral (`q_feat = 1`), so the
/// potential is purely topological; with soft labels the feature term
/// modulates it per pair. Returns the components and the zero-norm-row
/// diagnostic count.
pub fn map_encode<T: Scalar>(
    g: &Digraph<T>,
    soft_labels: Option<&Mat<T>>,
) -> Result<(QComponents<T>, usize)> {
    let pairs: Vec<(usize, usize)> =
        g.undirected_pairs().into_iter().map(|(u, v, _)| (u, v)).collect();
    let cent = compute_centralities(g);
    let q_topo = q_topology(&cent, &pairs);
    let (q_feat, zero_rows) = match soft_labels {
        Some(z) => {
            if z.rows() != g.n() {
                return Err(Error::Shape("soft labels must cover all nodes".into()));
            }
            let qf = q_feature(z, &pairs);
            (qf.q, qf.zero_norm_rows)
        }
        None => (vec![T::one(); pairs.len()], 0),
    };
    Ok((QComponents::assemble(pairs, q_topo, q_feat)?, zero_rows))
}

/// Scalar potential from the purely directed edge count:
/// `q = q_rel / max(min(m_onedir, n), 1)`, clamped to `[0, 1/4]`.
pub fn q_baseline_edges<T: Scalar>(g: &Digraph<T>, q_rel: T) -> Result<T> {
    if !(q_rel > T::zero()) {
        return Err(Error::Parameter("q_rel must be positive".into()));
    }
    let one_way = g
        .undirected_pairs()
        .iter()
        .filter(|&&(_, _, s)| s != 0)
        .count();
    let d_g = one_way.min(g.n()).max(1);
    Ok((q_rel / T::c(d_g as f64)).min(T::c(0.25)).max(T::zero()))
}

/// Scalar potential for length-`k` ring structure: `q = 1/k`, clamped to
/// `1/4`. Returns the value and whether clamping fired.
pub fn q_baseline_ring<T: Scalar>(k: usize) -> Result<(T, bool)> {
    if k < 3 {
        return Err(Error::Parameter(format!("ring length {k} < 3")));
    }
    let raw = T::one() / T::c(k as f64);
    let clamped = raw > T::c(0.25);
    Ok((if clamped { T::c(0.25) } else { raw }, clamped))
}

/// Scalar potential from an eigenvalue-perturbation budget `epsilon`
/// relative to the mean symmetrized degree: `q = arccos(1 - 2e/<d>)/(2pi)`.
pub fn q_baseline_perturbation<T: Scalar>(g: &Digraph<T>, epsilon: T) -> Result<T> {
    let pair_count = g.undirected_pairs().len();
    if pair_count == 0 {
        return Err(Error::Parameter("perturbation baseline needs edges".into()));
    }
    let mean_degree = T::c(2.0 * pair_count as f64 / g.n() as f64);
    if !(epsilon > T::zero() && epsilon < mean_degree / T::c(2.0)) {
        return Err(Error::Range(format!(
            "epsilon {epsilon} outside (0, {}/2)",
            mean_degree
        )));
    }
    let cos_arg = T::one() - T::c(2.0) * epsilon / mean_degree;
    Ok(cos_arg.acos() / (T::c(2.0) * T::PI()))
}

/// Scorer inputs for the learned potential: per pair, the q_feat-modulated
/// endpoint-centrality sums, column-normalized by [`tanh_mean_norm`].
pub fn edge_scorer_inputs<T: Scalar>(
    cent: &CentralityVectors<T>,
    pairs: &[(usize, usize)],
    q_feat: &[T],
) -> Mat<T> {
    let gc_col: Vec<T> = pairs
        .iter()
        .zip(q_feat)
        .map(|(&(u, v), &f)| (cent.gc[u] + cent.gc[v]) * f)
        .collect();
    let lc_col: Vec<T> = pairs
        .iter()
        .zip(q_feat)
        .map(|(&(u, v), &f)| (cent.lc[u] + cent.lc[v]) * f)
        .collect();
    let gc_n = tanh_mean_norm(&gc_col);
    let lc_n = tanh_mean_norm(&lc_col);
    let mut out = Mat::zeros(pairs.len(), 2);
    for i in 0..pairs.len() {
        out.set(i, 0, gc_n[i]);
        out.set(i, 1, lc_n[i]);
    }
    out
}

/// Writes the per-pair potential table as TSV with original node ids.
pub fn write_q_tsv<T: Scalar>(path: &Path, g: &Digraph<T>, q: &QComponents<T>) -> Result<()> {
    let ids = g.node_ids();
    let mut text = String::from("# u\tv\tq_topo\tq_feat\tq_star\n");
    for (i, &(u, v)) in q.pairs.iter().enumerate() {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            ids[u],
            ids[v],
            q.q_topo[i].f64(),
            q.q_feat[i].f64(),
            q.q_star[i].f64()
        ));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a potential table written by [`write_q_tsv`] back into components
/// aligned with the graph's pair list.
pub fn read_q_tsv<T: Scalar>(path: &Path, g: &Digraph<T>) -> Result<QComponents<T>> {
    let index: std::collections::HashMap<u64, usize> = g
        .node_ids()
        .iter()
        .enumerate()
        .map(|(v, &id)| (id, v))
        .collect();
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<((usize, usize), T, T)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Ingest {
                path: path.display().to_string(),
                line: idx + 1,
                msg: "expected 5 columns".into(),
            });
        }
        let bad = |what: &str| Error::Ingest {
            path: path.display().to_string(),
            line: idx + 1,
            msg: format!("bad {what}"),
        };
        let u: u64 = fields[0].parse().map_err(|_| bad("node id"))?;
        let v: u64 = fields[1].parse().map_err(|_| bad("node id"))?;
        let t: f64 = fields[2].parse().map_err(|_| bad("q_topo"))?;
        let f: f64 = fields[3].parse().map_err(|_| bad("q_feat"))?;
        let a = *index.get(&u).ok_or_else(|| bad("unknown node id"))?;
        let b = *index.get(&v).ok_or_else(|| bad("unknown node id"))?;
        rows.push(((a.min(b), a.max(b)), T::c(t), T::c(f)));
    }
    rows.sort_by_key(|&(p, _, _)| p);
    let expected: Vec<(usize, usize)> =
        g.undirected_pairs().into_iter().map(|(u, v, _)| (u, v)).collect();
    let got: Vec<(usize, usize)> = rows.iter().map(|&(p, _, _)| p).collect();
    if got != expected {
        return Err(Error::Parameter(
            "q table pairs do not match the graph's edge pairs".into(),
        ));
    }
    QComponents::assemble(
        expected,
        rows.iter().map(|&(_, t, _)| t).collect(),
        rows.iter().map(|&(_, _, f)| f).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Digraph<f64> {
        Digraph::new(edges, Mat::zeros(n, 1)).unwrap().0
    }

    #[test]
    fn single_loop_node_has_zero_global_centrality() {
        let g = graph(1, &[]);
        let deg = g.compute_degrees();
        let gc: Vec<f64> = global_centrality(&deg, deg.aug_edge_count(0), false);
        assert_eq!(gc, vec![0.0]);
    }

    #[test]
    fn one_edge_graph_centrality_matches_closed_form() {
        // 0->1 plus two sink loops: m~ = 3, each node has degrees (1, 2), so
        // GC = -[(1/3)ln(1/3) + (2/3)ln(2/3)] = ln 3 - (2/3) ln 2.
        let g = graph(2, &[(0, 1)]);
        let deg = g.compute_degrees();
        let gc: Vec<f64> = global_centrality(&deg, deg.aug_edge_count(g.m()), false);
        let want = 3f64.ln() - 2.0 / 3.0 * 2f64.ln();
        assert!((gc[0] - want).abs() < 1e-15);
        assert!((gc[1] - want).abs() < 1e-15);
        let literal: Vec<f64> = global_centrality(&deg, deg.aug_edge_count(g.m()), true);
        assert_eq!(literal[0], -gc[0]);
    }

    #[test]
    fn q_topology_handles_all_zero_centralities() {
        let cent = CentralityVectors { gc: vec![0.0, 0.0], lc: vec![0.0, 0.0] };
        assert_eq!(q_topology(&cent, &[(0, 1)]), vec![0.0]);
    }

    #[test]
    fn q_feature_angles_hit_the_documented_extremes() {
        let z = Mat::<f64>::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, 0.0],
        ])
        .unwrap();
        let qf = q_feature(&z, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert!((qf.q[0] - 0.0).abs() < 1e-15, "identical rows");
        assert!((qf.q[1] - 1.0).abs() < 1e-15, "orthogonal rows");
        assert!((qf.q[2] - 1.0).abs() < 1e-15, "antipodal rows clamp to one");
        assert_eq!(qf.q[3], 0.0, "zero-norm row treated as aligned");
        assert_eq!(qf.zero_norm_rows, 1);
    }

    #[test]
    fn assembled_q_star_stays_in_range() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 0), (3, 0)]);
        let (q, zero_rows) = map_encode(&g, None).unwrap();
        assert_eq!(zero_rows, 0);
        for (i, &v) in q.q_star.iter().enumerate() {
            assert!((0.0..=0.25).contains(&v), "q_star[{i}] = {v}");
            assert!((v - 0.25 * q.q_topo[i] * q.q_feat[i]).abs() < 1e-16);
        }
        // neutral feature term: potential is purely topological
        assert!(q.q_feat.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn edges_baseline_matches_hand_counts() {
        // 6 one-way edges on 10 nodes: q = 1 / max(min(6, 10), 1) = 1/6
        let g = graph(10, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]);
        let q = q_baseline_edges(&g, 1.0).unwrap();
        assert!((q - 1.0 / 6.0).abs() < 1e-15);
        // empty graph: d_G = 1, clamp to 1/4
        let empty = graph(3, &[]);
        assert_eq!(q_baseline_edges(&empty, 1.0).unwrap(), 0.25);
        assert!(q_baseline_edges(&g, 0.0).is_err());
    }

    #[test]
    fn ring_baseline_clamps_small_rings() {
        assert_eq!(q_baseline_ring::<f64>(4).unwrap(), (0.25, false));
        assert_eq!(q_baseline_ring::<f64>(5).unwrap(), (0.2, false));
        assert_eq!(q_baseline_ring::<f64>(3).unwrap(), (0.25, true));
        assert!(q_baseline_ring::<f64>(2).is_err());
    }

    #[test]
    fn perturbation_baseline_matches_closed_forms() {
        // 4-regular symmetrized graph: 8 nodes, 16 unordered pairs
        let mut edges = Vec::new();
        for v in 0..8usize {
            edges.push((v, (v + 1) % 8));
            edges.push((v, (v + 2) % 8));
        }
        let g = graph(8, &edges);
        assert_eq!(g.undirected_pairs().len(), 16);
        // eps = 1, <d> = 4: arccos(1/2)/(2pi) = 1/6
        let q = q_baseline_perturbation(&g, 1.0).unwrap();
        assert!((q - 1.0 / 6.0).abs() < 1e-15);
        // eps = <d>/2 is outside the open interval
        assert!(q_baseline_perturbation(&g, 2.0).is_err());
        // eps -> <d>/2 limit approaches arccos(0)/(2pi) = 1/4, the top of the q range
        let q = q_baseline_perturbation(&g, 2.0 - 1e-12).unwrap();
        assert!((q - 0.25).abs() < 1e-9);
    }

    #[test]
    fn q_tsv_roundtrip() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 0), (3, 0)]);
        let (q, _) = map_encode(&g, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.tsv");
        write_q_tsv(&path, &g, &q).unwrap();
        let back = read_q_tsv::<f64>(&path, &g).unwrap();
        assert_eq!(back.pairs, q.pairs);
        for i in 0..q.pairs.len() {
            assert!((back.q_star[i] - q.q_star[i]).abs() < 1e-15);
        }
    }
}
