//! Evaluation-pair construction for the three link tasks.
//!
//! All tasks hold out 5% of items for validation and 15% for testing. The
//! propagation graph drops the true edges behind held-out items so the
//! operator never sees what the classifier is asked to recover; training
//! items keep their edges.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::model::state::Task;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LinkSplit<T> {
    /// Graph the propagation operator is built from.
    pub prop_graph: Digraph<T>,
    pub train_pairs: Vec<(usize, usize)>,
    pub train_labels: Vec<usize>,
    pub val_pairs: Vec<(usize, usize)>,
    pub val_labels: Vec<usize>,
    pub test_pairs: Vec<(usize, usize)>,
    pub test_labels: Vec<usize>,
}

/// Items per split for a given item count: 5% val, 15% test (at least one
/// each), remainder train.
fn split_counts(total: usize) -> Result<(usize, usize, usize)> {
    let val = ((total as f64) * 0.05).round().max(1.0) as usize;
    let test = ((total as f64) * 0.15).round().max(1.0) as usize;
    if val + test >= total {
        return Err(Error::Parameter(format!(
            "{total} link items cannot cover train/val/test splits"
        )));
    }
    Ok((total - val - test, val, test))
}

/// Ordered node pairs with no edge in either direction, sampled uniformly
/// without replacement.
fn sample_nonadjacent<T: Scalar>(
    g: &Digraph<T>,
    count: usize,
    exclude: &BTreeSet<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>> {
    let n = g.n();
    let mut picked = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let cap = 200 * count.max(1) + 1000;
    while out.len() < count {
        attempts += 1;
        if attempts > cap {
            return Err(Error::Parameter(format!(
                "could not sample {count} non-adjacent pairs (graph too dense)"
            )));
        }
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b || g.has_edge(a, b) || g.has_edge(b, a) {
            continue;
        }
        if exclude.contains(&(a, b)) || !picked.insert((a, b)) {
            continue;
        }
        out.push((a, b));
    }
    Ok(out)
}

fn shuffled_indices(len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(rng);
    idx
}

/// Builds evaluation items and the propagation graph for `task`.
///
/// * existence: positives are the directed edges, negatives 1:1 sampled
///   non-adjacent ordered pairs; label 1 means the edge exists.
/// * direction: items are one-way pairs presented in a coin-flipped
///   orientation; label 1 means the presented orientation is the true one.
/// * three-class: one-way pairs presented either way (class 0 forward,
///   class 1 reverse) plus non-adjacent pairs as class 2, balanced.
pub fn make_link_split<T: Scalar>(
    g: &Digraph<T>,
    task: Task,
    seed: u64,
) -> Result<LinkSplit<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match task {
        Task::NodeClassification => {
            Err(Error::Config("node task does not use link splits".into()))
        }
        Task::LinkExistence => {
            let positives = g.edges().to_vec();
            let (n_train, n_val, n_test) = split_counts(positives.len())?;
            let order = shuffled_indices(positives.len(), &mut rng);
            let take = |range: std::ops::Range<usize>| -> Vec<(usize, usize)> {
                order[range].iter().map(|&i| positives[i]).collect()
            };
            let train_pos = take(0..n_train);
            let val_pos = take(n_train..n_train + n_val);
            let test_pos = take(n_train + n_val..n_train + n_val + n_test);
            let negatives =
                sample_nonadjacent(g, positives.len(), &BTreeSet::new(), &mut rng)?;
            let prop_graph = g.with_edge_subset(&train_pos)?;
            let assemble = |pos: &[(usize, usize)], neg: &[(usize, usize)]| {
                let mut pairs = pos.to_vec();
                pairs.extend_from_slice(neg);
                let mut labels = vec![1usize; pos.len()];
                labels.extend(std::iter::repeat(0).take(neg.len()));
                (pairs, labels)
            };
            let (train_pairs, train_labels) = assemble(&train_pos, &negatives[..n_train]);
            let (val_pairs, val_labels) =
                assemble(&val_pos, &negatives[n_train..n_train + n_val]);
            let (test_pairs, test_labels) =
                assemble(&test_pos, &negatives[n_train + n_val..n_train + n_val + n_test]);
            Ok(LinkSplit {
                prop_graph,
                train_pairs,
                train_labels,
                val_pairs,
                val_labels,
                test_pairs,
                test_labels,
            })
        }
        Task::LinkDirection | Task::LinkThreeClass => {
            let one_way: Vec<(usize, usize)> = g
                .undirected_pairs()
                .into_iter()
                .filter(|&(_, _, s)| s != 0)
                .map(|(u, v, s)| if s > 0 { (u, v) } else { (v, u) })
                .collect();
            if one_way.is_empty() {
                return Err(Error::Parameter("no one-way pairs for a direction task".into()));
            }
            // (presented pair, label, true edge)
            let mut items: Vec<((usize, usize), usize, Option<(usize, usize)>)> = one_way
                .iter()
                .map(|&(u, v)| {
                    if rng.random::<bool>() {
                        ((u, v), 0, Some((u, v)))
                    } else {
                        ((v, u), 1, Some((u, v)))
                    }
                })
                .collect();
            if task == Task::LinkDirection {
                // direction labels are binary: 1 = presented orientation is real
                for item in items.iter_mut() {
                    item.1 = if item.1 == 0 { 1 } else { 0 };
                }
            } else {
                let absent = sample_nonadjacent(
                    g,
                    (one_way.len() + 1) / 2,
                    &BTreeSet::new(),
                    &mut rng,
                )?;
                items.extend(absent.into_iter().map(|p| (p, 2usize, None)));
            }
            let (n_train, n_val, n_test) = split_counts(items.len())?;
            let order = shuffled_indices(items.len(), &mut rng);
            let slice = |range: std::ops::Range<usize>| -> Vec<_> {
                order[range].iter().map(|&i| items[i].clone()).collect::<Vec<_>>()
            };
            let train = slice(0..n_train);
            let val = slice(n_train..n_train + n_val);
            let test = slice(n_train + n_val..n_train + n_val + n_test);
            let held_out: BTreeSet<(usize, usize)> = val
                .iter()
                .chain(test.iter())
                .filter_map(|&(_, _, true_edge)| true_edge)
                .collect();
            let kept: Vec<(usize, usize)> = g
                .edges()
                .iter()
                .copied()
                .filter(|e| !held_out.contains(e))
                .collect();
            let prop_graph = g.with_edge_subset(&kept)?;
            let unzip = |items: Vec<((usize, usize), usize, Option<(usize, usize)>)>| {
                let pairs: Vec<_> = items.iter().map(|&(p, _, _)| p).collect();
                let labels: Vec<_> = items.iter().map(|&(_, l, _)| l).collect();
                (pairs, labels)
            };
            let (train_pairs, train_labels) = unzip(train);
            let (val_pairs, val_labels) = unzip(val);
            let (test_pairs, test_labels) = unzip(test);
            Ok(LinkSplit {
                prop_graph,
                train_pairs,
                train_labels,
                val_pairs,
                val_labels,
                test_pairs,
                test_labels,
            })
        }
    }
}
