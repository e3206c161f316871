//! Core directed-graph structure.

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Train/validation/test node masks. Masks are disjoint by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl Splits {
    pub fn new(train: Vec<bool>, val: Vec<bool>, test: Vec<bool>) -> Result<Self> {
        let n = train.len();
        if val.len() != n || test.len() != n {
            return Err(Error::Shape("split masks must share one length".into()));
        }
        for v in 0..n {
            if (train[v] as u8 + val[v] as u8 + test[v] as u8) > 1 {
                return Err(Error::Parameter(format!("node {v} appears in multiple splits")));
            }
        }
        Ok(Self { train, val, test })
    }

    pub fn count(mask: &[bool]) -> usize {
        mask.iter().filter(|&&b| b).count()
    }
}

/// What ingestion normalized away while building the canonical edge set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub duplicate_edges: usize,
    pub self_loops_dropped: usize,
    /// True when original ids were 1-based and shifted down by one.
    pub one_based_ids: bool,
}

/// Simple directed graph with unit edge weights and dense node features.
///
/// Edges are stored deduplicated, self-loop free, and sorted, alongside
/// forward and reverse adjacency for O(1) neighborhood access.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph<T> {
    n: usize,
    edges: Vec<(usize, usize)>,
    out_ptr: Vec<usize>,
    out_idx: Vec<usize>,
    in_ptr: Vec<usize>,
    in_idx: Vec<usize>,
    features: Mat<T>,
    labels: Option<Vec<usize>>,
    num_classes: usize,
    splits: Option<Splits>,
    node_ids: Vec<u64>,
}

impl<T: Scalar> Digraph<T> {
    /// Builds a graph from dense-index edges. Duplicates and self-loops are
    /// dropped and reported. `features` fixes the node count.
    pub fn new(edges: &[(usize, usize)], features: Mat<T>) -> Result<(Self, IngestReport)> {
        let n = features.rows();
        let mut report = IngestReport::default();
        let mut clean: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Parameter(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                report.self_loops_dropped += 1;
                continue;
            }
            clean.push((u, v));
        }
        clean.sort_unstable();
        let before = clean.len();
        clean.dedup();
        report.duplicate_edges = before - clean.len();

        let (out_ptr, out_idx) = build_csr(n, clean.iter().copied());
        let (in_ptr, in_idx) = build_csr(n, clean.iter().map(|&(u, v)| (v, u)));
        let node_ids = (0..n as u64).collect();
        Ok((
            Self {
                n,
                edges: clean,
                out_ptr,
                out_idx,
                in_ptr,
                in_idx,
                features,
                labels: None,
                num_classes: 0,
                splits: None,
                node_ids,
            },
            report,
        ))
    }

    pub fn with_labels(mut self, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Shape(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= num_classes) {
            return Err(Error::Range(format!(
                "label {bad} outside 0..{num_classes}"
            )));
        }
        self.labels = Some(labels);
        self.num_classes = num_classes;
        Ok(self)
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        if splits.train.len() != self.n {
            return Err(Error::Shape("split masks must cover all nodes".into()));
        }
        self.splits = Some(splits);
        Ok(self)
    }

    pub fn with_node_ids(mut self, ids: Vec<u64>) -> Result<Self> {
        if ids.len() != self.n {
            return Err(Error::Shape("one original id per node".into()));
        }
        self.node_ids = ids;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Mat<T> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn splits(&self) -> Option<&Splits> {
        self.splits.as_ref()
    }

    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_idx[self.out_ptr[v]..self.out_ptr[v + 1]]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_idx[self.in_ptr[v]..self.in_ptr[v + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_neighbors(u).binary_search(&v).is_ok()
    }

    /// Unordered node pairs joined by at least one edge, as `(u, v, sign)`
    /// with `u < v` and `sign = A(u,v) - A(v,u)` in `{-1, 0, 1}`
    /// (0 means the pair is bidirected).
    pub fn undirected_pairs(&self) -> Vec<(usize, usize, i8)> {
        let mut pairs = Vec::with_capacity(self.edges.len());
        for &(u, v) in &self.edges {
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            pairs.push((a, b));
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
            .into_iter()
            .map(|(a, b)| {
                let fwd = self.has_edge(a, b);
                let rev = self.has_edge(b, a);
                let sign = match (fwd, rev) {
                    (true, false) => 1,
                    (false, true) => -1,
                    _ => 0,
                };
                (a, b, sign)
            })
            .collect()
    }

    /// In/out degrees plus the sink-augmentation rule: every node missing
    /// either direction gets a self-loop in the augmented adjacency.
    pub fn compute_degrees(&self) -> DegreeStats {
        let n = self.n;
        let mut d_in = vec![0usize; n];
        let mut d_out = vec![0usize; n];
        for &(u, v) in &self.edges {
            d_out[u] += 1;
            d_in[v] += 1;
        }
        let sink_loops: Vec<bool> =
            (0..n).map(|v| d_in[v] == 0 || d_out[v] == 0).collect();
        DegreeStats { d_in, d_out, sink_loops }
    }

    /// Relabels nodes: node `v` becomes `perm[v]`. Used to check that the
    /// pipeline is equivariant under node ordering.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Shape("permutation length must equal n".into()));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::Parameter("not a permutation".into()));
            }
            seen[p] = true;
        }
        let edges: Vec<(usize, usize)> =
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        let mut feat = Mat::zeros(self.n, self.features.cols());
        for v in 0..self.n {
            feat.row_mut(perm[v]).copy_from_slice(self.features.row(v));
        }
        let (mut g, _) = Digraph::new(&edges, feat)?;
        if let Some(labels) = &self.labels {
            let mut l = vec![0usize; self.n];
            for v in 0..self.n {
                l[perm[v]] = labels[v];
            }
            g = g.with_labels(l, self.num_classes)?;
        }
        if let Some(s) = &self.splits {
            let mut train = vec![false; self.n];
            let mut val = vec![false; self.n];
            let mut test = vec![false; self.n];
            for v in 0..self.n {
                train[perm[v]] = s.train[v];
                val[perm[v]] = s.val[v];
                test[perm[v]] = s.test[v];
            }
            g = g.with_splits(Splits::new(train, val, test)?)?;
        }
        let mut ids = vec![0u64; self.n];
        for v in 0..self.n {
            ids[perm[v]] = self.node_ids[v];
        }
        g = g.with_node_ids(ids)?;
        Ok(g)
    }

    /// Same nodes and features, different edge set. Labels, splits, and ids
    /// carry over. Used by link tasks to propagate on training edges only.
    pub fn with_edge_subset(&self, edges: &[(usize, usize)]) -> Result<Self> {
        let (g, _) = Digraph::new(edges, self.features.clone())?;
        let mut g = g.with_node_ids(self.node_ids.clone())?;
        if let Some(labels) = &self.labels {
            g = g.with_labels(labels.clone(), self.num_classes)?;
        }
        if let Some(s) = &self.splits {
            g = g.with_splits(s.clone())?;
        }
        Ok(g)
    }
}

fn build_csr(n: usize, edges: impl Iterator<Item = (usize, usize)> + Clone) -> (Vec<usize>, Vec<usize>) {
    let mut ptr = vec![0usize; n + 1];
    for (u, _) in edges.clone() {
        ptr[u + 1] += 1;
    }
    for i in 0..n {
        ptr[i + 1] += ptr[i];
    }
    let mut idx = vec![0usize; ptr[n]];
    let mut cursor = ptr.clone();
    for (u, v) in edges {
        idx[cursor[u]] = v;
        cursor[u] += 1;
    }
    for v in 0..n {
        idx[ptr[v]..ptr[v + 1]].sort_unstable();
    }
    (ptr, idx)
}

/// Degree tallies together with the sink-augmentation mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeStats {
    pub d_in: Vec<usize>,
    pub d_out: Vec<usize>,
    /// True for nodes that receive an augmentation self-loop
    /// (zero in-degree or zero out-degree).
    pub sink_loops: Vec<bool>,
}

impl DegreeStats {
    pub fn n(&self) -> usize {
        self.d_in.len()
    }

    /// In-degree counting the augmentation self-loop.
    pub fn aug_in(&self, v: usize) -> usize {
        self.d_in[v] + self.sink_loops[v] as usize
    }

    /// Out-degree counting the augmentation self-loop.
    pub fn aug_out(&self, v: usize) -> usize {
        self.d_out[v] + self.sink_loops[v] as usize
    }

    /// Total degree `d_in + d_out` (unaugmented).
    pub fn total(&self, v: usize) -> usize {
        self.d_in[v] + self.d_out[v]
    }

    /// Edge count of the augmented graph: original edges plus self-loops.
    pub fn aug_edge_count(&self, m: usize) -> usize {
        m + self.sink_loops.iter().filter(|&&b| b).count()
    }
}
