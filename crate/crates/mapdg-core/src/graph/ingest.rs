//! File ingestion: edge lists, features, labels, splits, and the on-disk
//! bundle layout used between pipeline stages.
//!
//! Node ids in text files are feature-row indices. Both 0-based and 1-based
//! files are accepted: if every id fits `0..n-1` the ids are taken verbatim;
//! if they span `1..=n` they are shifted down by one. Anything else is an
//! error naming the offending line. Original ids are kept and used in all
//! written artifacts.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::graph::{Digraph, IngestReport, Splits};
use crate::io;
use crate::scalar::Scalar;

/// How to derive train/val/test node masks during ingestion.
#[derive(Debug, Clone)]
pub enum SplitSpec {
    /// Per-class training quota, a validation pool size, rest test.
    Counts { train_per_class: usize, val: usize, seed: u64 },
    /// Explicit node-id list files, one id per line.
    Files { train: PathBuf, val: PathBuf, test: PathBuf },
}

fn ingest_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Ingest { path: path.display().to_string(), line, msg: msg.into() }
}

/// Reads a whitespace-separated `u v` edge list. `#` comments and blank
/// lines are skipped. Returns raw ids with their 1-based line numbers.
pub fn read_edge_list(path: &Path) -> Result<Vec<(u64, u64, usize)>> {
    let text = std::fs::read_to_string(path)?;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (u, v) = match (it.next(), it.next(), it.next()) {
            (Some(u), Some(v), None) => (u, v),
            _ => return Err(ingest_err(path, idx + 1, "expected exactly two ids")),
        };
        let u: u64 = u
            .parse()
            .map_err(|_| ingest_err(path, idx + 1, format!("bad node id '{u}'")))?;
        let v: u64 = v
            .parse()
            .map_err(|_| ingest_err(path, idx + 1, format!("bad node id '{v}'")))?;
        edges.push((u, v, idx + 1));
    }
    Ok(edges)
}

/// Reads node features from the binary container or the CSV fallback,
/// sniffed by magic bytes.
pub fn read_features<T: Scalar>(path: &Path) -> Result<Mat<T>> {
    let head = {
        let mut buf = [0u8; 8];
        use std::io::Read;
        let mut f = std::fs::File::open(path)?;
        let got = f.read(&mut buf)?;
        buf[..got].to_vec()
    };
    if head.len() == 8 && (head == io::MAGIC_F32 || head == io::MAGIC_F64) {
        io::read_mat(path)
    } else {
        io::read_mat_csv(path)
    }
}

/// Reads a `node<TAB>class` label file. Returns raw ids with line numbers.
pub fn read_labels(path: &Path) -> Result<Vec<(u64, usize, usize)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (id, class) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(ingest_err(path, idx + 1, "expected 'node class'")),
        };
        let id: u64 = id
            .parse()
            .map_err(|_| ingest_err(path, idx + 1, format!("bad node id '{id}'")))?;
        let class: usize = class
            .parse()
            .map_err(|_| ingest_err(path, idx + 1, format!("bad class '{class}'")))?;
        out.push((id, class, idx + 1));
    }
    Ok(out)
}

/// Resolves the id base shared by every id-bearing file of one dataset.
/// `ids` pairs each raw id with the `(path, line)` it came from.
fn resolve_id_base(n: usize, ids: &[(u64, &Path, usize)]) -> Result<u64> {
    let max = ids.iter().map(|&(id, _, _)| id).max().unwrap_or(0);
    if max < n as u64 {
        return Ok(0);
    }
    let min = ids.iter().map(|&(id, _, _)| id).min().unwrap_or(0);
    if max == n as u64 && min >= 1 {
        return Ok(1);
    }
    let &(id, path, line) = ids.iter().max_by_key(|&&(id, _, _)| id).unwrap();
    Err(ingest_err(
        path,
        line,
        format!("node id {id} does not fit a {n}-row feature matrix"),
    ))
}

/// Builds per-class training masks, a validation pool, and a test remainder.
pub fn split_by_counts(
    labels: &[usize],
    num_classes: usize,
    train_per_class: usize,
    val: usize,
    seed: u64,
) -> Result<Splits> {
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (v, &c) in labels.iter().enumerate() {
        by_class[c].push(v);
    }
    let mut train = vec![false; n];
    let mut rest: Vec<usize> = Vec::new();
    for (c, mut members) in by_class.into_iter().enumerate() {
        if members.len() < train_per_class {
            return Err(Error::Parameter(format!(
                "class {c} has {} nodes, fewer than train_per_class = {train_per_class}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for &v in &members[..train_per_class] {
            train[v] = true;
        }
        rest.extend_from_slice(&members[train_per_class..]);
    }
    if rest.len() < val {
        return Err(Error::Parameter(format!(
            "only {} nodes left for a validation pool of {val}",
            rest.len()
        )));
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let mut val_mask = vec![false; n];
    let mut test_mask = vec![false; n];
    for (i, &v) in rest.iter().enumerate() {
        if i < val {
            val_mask[v] = true;
        } else {
            test_mask[v] = true;
        }
    }
    Splits::new(train, val_mask, test_mask)
}

fn read_id_file(path: &Path) -> Result<Vec<(u64, usize)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id: u64 = line
            .parse()
            .map_err(|_| ingest_err(path, idx + 1, format!("bad node id '{line}'")))?;
        out.push((id, idx + 1));
    }
    Ok(out)
}

/// Full dataset ingestion from raw files.
pub fn ingest<T: Scalar>(
    edges_path: &Path,
    features_path: &Path,
    labels_path: Option<&Path>,
    split: Option<&SplitSpec>,
) -> Result<(Digraph<T>, IngestReport)> {
    let features = read_features::<T>(features_path)?;
    let n = features.rows();
    let raw_edges = read_edge_list(edges_path)?;
    let raw_labels = match labels_path {
        Some(p) => Some((p, read_labels(p)?)),
        None => None,
    };
    let split_files = match split {
        Some(SplitSpec::Files { train, val, test }) => Some((
            (train.as_path(), read_id_file(train)?),
            (val.as_path(), read_id_file(val)?),
            (test.as_path(), read_id_file(test)?),
        )),
        _ => None,
    };

    let mut all_ids: Vec<(u64, &Path, usize)> = Vec::new();
    for &(u, v, line) in &raw_edges {
        all_ids.push((u, edges_path, line));
        all_ids.push((v, edges_path, line));
    }
    if let Some((p, labels)) = &raw_labels {
        for &(id, _, line) in labels {
            all_ids.push((id, p, line));
        }
    }
    if let Some(((pa, a), (pb, b), (pc, c))) = &split_files {
        for (p, list) in [(pa, a), (pb, b), (pc, c)] {
            for &(id, line) in list {
                all_ids.push((id, p, line));
            }
        }
    }
    let base = resolve_id_base(n, &all_ids)?;

    let edges: Vec<(usize, usize)> = raw_edges
        .iter()
        .map(|&(u, v, _)| ((u - base) as usize, (v - base) as usize))
        .collect();
    let (mut g, mut report) = Digraph::new(&edges, features)?;
    report.one_based_ids = base == 1;
    g = g.with_node_ids((base..n as u64 + base).collect())?;

    if let Some((p, labels)) = &raw_labels {
        let mut assigned: Vec<Option<usize>> = vec![None; n];
        let mut num_classes = 0usize;
        for &(id, class, line) in labels {
            let v = (id - base) as usize;
            if assigned[v].is_some() {
                return Err(ingest_err(p, line, format!("node {id} labeled twice")));
            }
            assigned[v] = Some(class);
            num_classes = num_classes.max(class + 1);
        }
        if let Some(missing) = assigned.iter().position(Option::is_none) {
            return Err(ingest_err(
                p,
                0,
                format!("node {} has no label", missing as u64 + base),
            ));
        }
        g = g.with_labels(assigned.into_iter().map(Option::unwrap).collect(), num_classes)?;
    }

    match (split, split_files) {
        (Some(SplitSpec::Counts { train_per_class, val, seed }), _) => {
            let labels = g
                .labels()
                .ok_or_else(|| Error::Parameter("count-based splits need labels".into()))?
                .to_vec();
            let splits =
                split_by_counts(&labels, g.num_classes(), *train_per_class, *val, *seed)?;
            g = g.with_splits(splits)?;
        }
        (_, Some(((_, a), (_, b), (_, c)))) => {
            let to_mask = |list: Vec<(u64, usize)>| {
                let mut mask = vec![false; n];
                for (id, _) in list {
                    mask[(id - base) as usize] = true;
                }
                mask
            };
            g = g.with_splits(Splits::new(to_mask(a), to_mask(b), to_mask(c))?)?;
        }
        _ => {}
    }
    Ok((g, report))
}

#[derive(Serialize, Deserialize)]
struct BundleMeta {
    format_version: u32,
    n: usize,
    m: usize,
    num_classes: usize,
    has_labels: bool,
    has_splits: bool,
    node_ids: Vec<u64>,
}

/// Writes the stage-output bundle: `graph.json`, `edges.tsv`,
/// `features.bin`, and optional `labels.tsv` / `splits.json`.
pub fn save_bundle<T: Scalar>(dir: &Path, g: &Digraph<T>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let ids = g.node_ids();
    let meta = BundleMeta {
        format_version: 1,
        n: g.n(),
        m: g.m(),
        num_classes: g.num_classes(),
        has_labels: g.labels().is_some(),
        has_splits: g.splits().is_some(),
        node_ids: ids.to_vec(),
    };
    std::fs::write(dir.join("graph.json"), serde_json::to_string_pretty(&meta)?)?;
    let mut edges = String::new();
    for &(u, v) in g.edges() {
        edges.push_str(&format!("{}\t{}\n", ids[u], ids[v]));
    }
    std::fs::write(dir.join("edges.tsv"), edges)?;
    io::write_mat_f32(&dir.join("features.bin"), g.features())?;
    if let Some(labels) = g.labels() {
        let mut text = String::new();
        for (v, &c) in labels.iter().enumerate() {
            text.push_str(&format!("{}\t{}\n", ids[v], c));
        }
        std::fs::write(dir.join("labels.tsv"), text)?;
    }
    if let Some(s) = g.splits() {
        let pick = |mask: &[bool]| -> Vec<u64> {
            mask.iter()
                .enumerate()
                .filter(|&(_, &b)| b)
                .map(|(v, _)| ids[v])
                .collect()
        };
        let splits = serde_json::json!({
            "train": pick(&s.train),
            "val": pick(&s.val),
            "test": pick(&s.test),
        });
        std::fs::write(dir.join("splits.json"), serde_json::to_string_pretty(&splits)?)?;
    }
    Ok(())
}

/// Loads a bundle written by [`save_bundle`].
pub fn load_bundle<T: Scalar>(dir: &Path) -> Result<Digraph<T>> {
    let meta_path = dir.join("graph.json");
    let meta: BundleMeta = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?;
    let features = io::read_mat::<T>(&dir.join("features.bin"))?;
    if features.rows() != meta.n {
        return Err(ingest_err(&meta_path, 0, "feature rows disagree with graph.json"));
    }
    let index: HashMap<u64, usize> =
        meta.node_ids.iter().enumerate().map(|(v, &id)| (id, v)).collect();
    let edges_path = dir.join("edges.tsv");
    let raw = read_edge_list(&edges_path)?;
    let mut edges = Vec::with_capacity(raw.len());
    for (u, v, line) in raw {
        let a = *index
            .get(&u)
            .ok_or_else(|| ingest_err(&edges_path, line, format!("unknown node id {u}")))?;
        let b = *index
            .get(&v)
            .ok_or_else(|| ingest_err(&edges_path, line, format!("unknown node id {v}")))?;
        edges.push((a, b));
    }
    let (g, _) = Digraph::new(&edges, features)?;
    let mut g = g.with_node_ids(meta.node_ids.clone())?;
    if meta.has_labels {
        let labels_path = dir.join("labels.tsv");
        let raw = read_labels(&labels_path)?;
        let mut labels = vec![0usize; meta.n];
        let mut seen = vec![false; meta.n];
        for (id, class, line) in raw {
            let v = *index
                .get(&id)
                .ok_or_else(|| ingest_err(&labels_path, line, format!("unknown node id {id}")))?;
            labels[v] = class;
            seen[v] = true;
        }
        if !seen.iter().all(|&b| b) {
            return Err(ingest_err(&labels_path, 0, "labels missing for some nodes"));
        }
        g = g.with_labels(labels, meta.num_classes)?;
    }
    if meta.has_splits {
        let text = std::fs::read_to_string(dir.join("splits.json"))?;
        let raw: serde_json::Value = serde_json::from_str(&text)?;
        let mask_of = |key: &str| -> Result<Vec<bool>> {
            let mut mask = vec![false; meta.n];
            for id in raw[key].as_array().into_iter().flatten() {
                let id = id.as_u64().ok_or_else(|| Error::Config("bad splits.json".into()))?;
                let v = *index
                    .get(&id)
                    .ok_or_else(|| Error::Config(format!("unknown node id {id} in splits")))?;
                mask[v] = true;
            }
            Ok(mask)
        };
        let splits = Splits::new(mask_of("train")?, mask_of("val")?, mask_of("test")?)?;
        g = g.with_splits(splits)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_ids_are_detected_and_shifted() {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("edges.tsv");
        let f = dir.path().join("features.csv");
        std::fs::write(&e, "1\t2\n2\t3\n# comment\n\n3\t1\n").unwrap();
        std::fs::write(&f, "3,2\n1,0\n0,1\n1,1\n").unwrap();
        let (g, report) = ingest::<f64>(&e, &f, None, None).unwrap();
        assert!(report.one_based_ids);
        assert_eq!(g.n(), 3);
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(2, 0));
        assert_eq!(g.node_ids(), &[1, 2, 3]);
    }

    #[test]
    fn oversized_id_errors_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("edges.tsv");
        let f = dir.path().join("features.csv");
        std::fs::write(&e, "0\t1\n2\t7\n").unwrap();
        std::fs::write(&f, "5,1\n0\n0\n0\n0\n0\n").unwrap();
        let err = ingest::<f64>(&e, &f, None, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("edges.tsv:2"), "got: {msg}");
        assert!(msg.contains('7'), "got: {msg}");
    }

    #[test]
    fn bundle_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = crate::graph::generate_synthetic::<f64>(40, 3.0, 0.5, 2, 3, 5).unwrap();
        let labels = g.labels().unwrap().to_vec();
        let splits = split_by_counts(&labels, 2, 5, 10, 1).unwrap();
        let g = g.with_splits(splits).unwrap();
        let b1 = dir.path().join("b1");
        save_bundle(&b1, &g).unwrap();
        let g1 = load_bundle::<f64>(&b1).unwrap();
        // one serialization quantizes features to f32; after that the cycle
        // is a fixed point
        let b2 = dir.path().join("b2");
        save_bundle(&b2, &g1).unwrap();
        let g2 = load_bundle::<f64>(&b2).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(g1.edges(), g.edges());
        assert_eq!(g1.labels(), g.labels());
        assert_eq!(g1.splits(), g.splits());
    }

    #[test]
    fn count_split_respects_quotas() {
        let labels = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let s = split_by_counts(&labels, 2, 2, 3, 9).unwrap();
        assert_eq!(Splits::count(&s.train), 4);
        assert_eq!(Splits::count(&s.val), 3);
        assert_eq!(Splits::count(&s.test), 3);
        let train_classes: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|&(v, _)| s.train[v])
            .map(|(_, &c)| c)
            .collect();
        assert_eq!(train_classes.iter().filter(|&&c| c == 0).count(), 2);
    }
}
