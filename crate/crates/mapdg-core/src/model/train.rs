//! The epoch loop: intermittent re-encoding, cached propagation between
//! re-encodes, and early stopping on the validation metric.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{CMat, Mat};
use crate::encoding::{
    compute_centralities, edge_scorer_inputs, map_encode, q_baseline_edges,
    q_baseline_perturbation, q_baseline_ring, q_feature,
};
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::magnetic::{
    assemble_star_mgo, build_symmetric_norm, propagate, ComplexCsr, EdgePhaseAssignment,
    PropagationStack, QStats,
};
use crate::model::forward::{
    attention_backward, attention_forward, cross_entropy_masked, edge_q_backward, edge_q_forward,
    gather_pair_rows, propagation_backward, q_pair_gradient, scatter_pair_rows, softmax_rows,
    EdgeQCache,
};
use crate::model::link::{make_link_split, LinkSplit};
use crate::model::metrics::{accuracy, argmax_tie_lowest, auc, average_precision};
use crate::model::mlp::{LinearGrads, MlpGrads};
use crate::model::state::{ModelDims, ModelState, Strategy, Task, TrainConfig};
use crate::model::adam::AdamHyper;
use crate::scalar::Scalar;

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_metric: f64,
    pub test_metric: f64,
    pub q_stats: QStats,
}

/// Result of a training run: the best-validation snapshot plus the log.
#[derive(Debug, Clone)]
pub struct TrainOutput<T> {
    pub state: ModelState<T>,
    pub stack: PropagationStack<T>,
    /// Per-pair potentials active at the best epoch, ordered like the
    /// propagation graph's canonical pair list.
    pub q_star: Vec<T>,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val: f64,
    pub test_at_best: f64,
    /// Zero-norm soft-label rows encountered across re-encodes.
    pub zero_norm_rows: usize,
}

struct PairSets {
    train_pairs: Vec<(usize, usize)>,
    train_labels: Vec<usize>,
    val_pairs: Vec<(usize, usize)>,
    val_labels: Vec<usize>,
    test_pairs: Vec<(usize, usize)>,
    test_labels: Vec<usize>,
}

enum Items {
    Node {
        labels: Vec<usize>,
        train_idx: Vec<usize>,
        train: Vec<bool>,
        val: Vec<bool>,
        test: Vec<bool>,
    },
    Link {
        sets: PairSets,
    },
}

struct Operator<T> {
    phases: EdgePhaseAssignment<T>,
    mgo: ComplexCsr<T>,
    stack: PropagationStack<T>,
}

fn build_operator<T: Scalar>(
    g: &Digraph<T>,
    norm: &ComplexCsr<T>,
    q: Vec<T>,
    k: usize,
) -> Result<Operator<T>> {
    let phases = EdgePhaseAssignment::new(g, q)?;
    let mgo = assemble_star_mgo(norm, &phases)?;
    let stack = propagate(&mgo, g.features(), k)?;
    Ok(Operator { phases, mgo, stack })
}

fn class1_scores<T: Scalar>(probs: &Mat<T>) -> Vec<f64> {
    (0..probs.rows()).map(|r| probs.get(r, 1).f64()).collect()
}

fn bool_labels(labels: &[usize]) -> Vec<bool> {
    labels.iter().map(|&l| l == 1).collect()
}

/// Metrics of the current state, plus the matrix the next re-encode draws
/// its feature term from: class probabilities for the node task, node
/// embeddings for link tasks.
fn evaluate<T: Scalar>(
    state: &ModelState<T>,
    stack: &PropagationStack<T>,
    items: &Items,
    task: Task,
) -> Result<(f64, f64, f64, Mat<T>)> {
    let (h, _) = attention_forward(&state.att_scorer, stack);
    match items {
        Items::Node { labels, train, val, test, .. } => {
            let z = softmax_rows(&state.update.forward(&h));
            let preds: Vec<usize> =
                (0..z.rows()).map(|r| argmax_tie_lowest(z.row(r))).collect();
            let tr = accuracy(&preds, labels, Some(train))?;
            let va = accuracy(&preds, labels, Some(val))?;
            let te = accuracy(&preds, labels, Some(test))?;
            Ok((tr, va, te, z))
        }
        Items::Link { sets } => {
            let split_metric = |pairs: &[(usize, usize)], labels: &[usize]| -> Result<f64> {
                let probs = softmax_rows(&state.update.forward(&gather_pair_rows(&h, pairs)));
                match task {
                    Task::LinkExistence => auc(&class1_scores(&probs), &bool_labels(labels)),
                    Task::LinkDirection => {
                        average_precision(&class1_scores(&probs), &bool_labels(labels))
                    }
                    Task::LinkThreeClass => {
                        let preds: Vec<usize> =
                            (0..probs.rows()).map(|r| argmax_tie_lowest(probs.row(r))).collect();
                        accuracy(&preds, labels, None)
                    }
                    Task::NodeClassification => unreachable!("link items"),
                }
            };
            let train_probs =
                softmax_rows(&state.update.forward(&gather_pair_rows(&h, &sets.train_pairs)));
            let train_preds: Vec<usize> = (0..train_probs.rows())
                .map(|r| argmax_tie_lowest(train_probs.row(r)))
                .collect();
            let tr = accuracy(&train_preds, &sets.train_labels, None)?;
            let va = split_metric(&sets.val_pairs, &sets.val_labels)?;
            let te = split_metric(&sets.test_pairs, &sets.test_labels)?;
            Ok((tr, va, te, h))
        }
    }
}

/// Loss and parameter gradients for one epoch. `dsteps` carries the
/// gradient reaching every propagation step for the potential path.
#[allow(clippy::type_complexity)]
fn train_step<T: Scalar>(
    state: &ModelState<T>,
    stack: &PropagationStack<T>,
    items: &Items,
    n: usize,
) -> Result<(T, LinearGrads<T>, MlpGrads<T>, Vec<CMat<T>>)> {
    let (h, att_cache) = attention_forward(&state.att_scorer, stack);
    let (loss, update_grads, dh) = match items {
        Items::Node { labels, train_idx, .. } => {
            let logits = state.update.forward(&h);
            let (loss, dlogits) = cross_entropy_masked(&logits, labels, train_idx)?;
            let (ug, dh) = state.update.backward(&h, &dlogits);
            (loss, ug, dh)
        }
        Items::Link { sets } => {
            let x = gather_pair_rows(&h, &sets.train_pairs);
            let logits = state.update.forward(&x);
            let all: Vec<usize> = (0..sets.train_pairs.len()).collect();
            let (loss, dlogits) = cross_entropy_masked(&logits, &sets.train_labels, &all)?;
            let (ug, dx) = state.update.backward(&x, &dlogits);
            (loss, ug, scatter_pair_rows(&dx, &sets.train_pairs, n))
        }
    };
    let (att_grads, dsteps) = attention_backward(&state.att_scorer, stack, &att_cache, &dh);
    Ok((loss, update_grads, att_grads, dsteps))
}

fn one_hot_train_rows<T: Scalar>(mut z: Mat<T>, labels: &[usize], train: &[bool]) -> Mat<T> {
    for v in 0..z.rows() {
        if train[v] {
            let row = z.row_mut(v);
            for x in row.iter_mut() {
                *x = T::zero();
            }
            row[labels[v]] = T::one();
        }
    }
    z
}

struct FireCtx<T> {
    inputs: Mat<T>,
    cache: EdgeQCache<T>,
}

/// Runs the full loop and returns the best-validation snapshot.
///
/// Adaptive strategies re-encode at epochs where `epoch % re_encode_every
/// == 0` (epochs count from 1): the feature term is recomputed from the
/// current state's outputs, the operator and stack are rebuilt, and for the
/// learned-potential strategy gradients flow through the fresh stack into
/// the edge scorer at that epoch only. All other epochs reuse the cached
/// stack. Non-adaptive strategies never rebuild.
pub fn train<T: Scalar>(g: &Digraph<T>, cfg: &TrainConfig) -> Result<TrainOutput<T>> {
    cfg.validate()?;
    let mut link_prop: Option<Digraph<T>> = None;
    let items: Items = match cfg.task {
        Task::NodeClassification => {
            let labels = g
                .labels()
                .ok_or_else(|| Error::Config("node task needs labels".into()))?
                .to_vec();
            let splits = g
                .splits()
                .ok_or_else(|| Error::Config("node task needs train/val/test splits".into()))?
                .clone();
            let train_idx: Vec<usize> = (0..g.n()).filter(|&v| splits.train[v]).collect();
            Items::Node { labels, train_idx, train: splits.train, val: splits.val, test: splits.test }
        }
        _ => {
            let LinkSplit {
                prop_graph,
                train_pairs,
                train_labels,
                val_pairs,
                val_labels,
                test_pairs,
                test_labels,
            } = make_link_split(g, cfg.task, cfg.seed)?;
            link_prop = Some(prop_graph);
            Items::Link {
                sets: PairSets {
                    train_pairs,
                    train_labels,
                    val_pairs,
                    val_labels,
                    test_pairs,
                    test_labels,
                },
            }
        }
    };
    let gp: &Digraph<T> = link_prop.as_ref().unwrap_or(g);
    let n = gp.n();
    let f = gp.features().cols();
    let classes = cfg.task.classes(g.num_classes());
    if classes < 2 {
        return Err(Error::Config("need at least 2 classes".into()));
    }
    let emb_dim = if cfg.task.is_link() { 4 * f } else { 2 * f };
    let dims = ModelDims {
        k: cfg.k,
        f,
        classes,
        emb_dim,
        edge_hidden: cfg.edge_hidden,
        att_hidden: cfg.att_hidden,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = ModelState::init(dims, &mut rng);

    let norm = build_symmetric_norm(gp);
    let pairs: Vec<(usize, usize)> =
        gp.undirected_pairs().into_iter().map(|(u, v, _)| (u, v)).collect();
    let cent = compute_centralities(gp);
    let mut zero_norm_total = 0usize;

    let init_q: Vec<T> = match cfg.strategy {
        Strategy::Map => map_encode(gp, None)?.0.q_star,
        Strategy::MapPlusPlus => {
            let ones = vec![T::one(); pairs.len()];
            let inputs = edge_scorer_inputs(&cent, &pairs, &ones);
            edge_q_forward(&state.edge_scorer, &inputs).0
        }
        Strategy::Fixed { q } => vec![T::c(q); pairs.len()],
        Strategy::EdgesBaseline { q_rel } => {
            vec![q_baseline_edges(gp, T::c(q_rel))?; pairs.len()]
        }
        Strategy::RingBaseline { k } => vec![q_baseline_ring::<T>(k)?.0; pairs.len()],
        Strategy::PerturbationBaseline { epsilon } => {
            vec![q_baseline_perturbation(gp, T::c(epsilon))?; pairs.len()]
        }
    };
    let mut op = build_operator(gp, &norm, init_q, cfg.k)?;
    let mut q_stats = QStats::from_values(op.phases.q());

    let hp = AdamHyper::new(cfg.lr, cfg.weight_decay);
    let mut log: Vec<EpochRecord> = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(ModelState<T>, PropagationStack<T>, Vec<T>, usize, f64, f64)> = None;
    let mut since_best = 0usize;

    for epoch in 1..=cfg.epochs {
        let fires = cfg.strategy.is_adaptive() && epoch % cfg.re_encode_every == 0;
        let mut fire_ctx: Option<FireCtx<T>> = None;
        if fires {
            let (_, _, _, z) = evaluate(&state, &op.stack, &items, cfg.task)?;
            let z_src = match &items {
                Items::Node { labels, train, .. } => one_hot_train_rows(z, labels, train),
                Items::Link { .. } => z,
            };
            match cfg.strategy {
                Strategy::Map => {
                    let (comp, zn) = map_encode(gp, Some(&z_src))?;
                    zero_norm_total += zn;
                    op = build_operator(gp, &norm, comp.q_star, cfg.k)?;
                }
                Strategy::MapPlusPlus => {
                    let qf = q_feature(&z_src, &pairs);
                    zero_norm_total += qf.zero_norm_rows;
                    let inputs = edge_scorer_inputs(&cent, &pairs, &qf.q);
                    let (q, cache) = edge_q_forward(&state.edge_scorer, &inputs);
                    op = build_operator(gp, &norm, q, cfg.k)?;
                    fire_ctx = Some(FireCtx { inputs, cache });
                }
                _ => unreachable!("only adaptive strategies fire"),
            }
            q_stats = QStats::from_values(op.phases.q());
        }

        let (loss, update_grads, att_grads, dsteps) = train_step(&state, &op.stack, &items, n)?;
        let loss_f = loss.f64();
        if !loss_f.is_finite() {
            return Err(Error::Diverged { epoch, msg: format!("loss = {loss_f}") });
        }
        if let Some(ctx) = &fire_ctx {
            let (d_re, d_im) = propagation_backward(&op.mgo, &op.stack, &dsteps);
            let dq = q_pair_gradient(&op.mgo, &op.phases, &d_re, &d_im);
            let eg = edge_q_backward(&state.edge_scorer, &ctx.inputs, &ctx.cache, &dq);
            state.opt_edge.step(&hp, state.edge_scorer.tensors_mut(), eg.tensors());
        }
        state.opt_att.step(&hp, state.att_scorer.tensors_mut(), att_grads.tensors());
        state.opt_update.step(&hp, state.update.tensors_mut(), update_grads.tensors());
        state.epoch = epoch;

        let (train_acc, val_metric, test_metric, _) =
            evaluate(&state, &op.stack, &items, cfg.task)?;
        log.push(EpochRecord {
            epoch,
            loss: loss_f,
            train_acc,
            val_metric,
            test_metric,
            q_stats,
        });

        let improved = best.as_ref().map_or(true, |b| val_metric > b.4);
        if improved {
            best = Some((
                state.clone(),
                op.stack.clone(),
                op.phases.q().to_vec(),
                epoch,
                val_metric,
                test_metric,
            ));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let (state, stack, q_star, best_epoch, best_val, test_at_best) = match best {
        Some(b) => b,
        None => {
            let (_, val, test, _) = evaluate(&state, &op.stack, &items, cfg.task)?;
            (state, op.stack, op.phases.q().to_vec(), 0, val, test)
        }
    };
    Ok(TrainOutput {
        state,
        stack,
        q_star,
        log,
        best_epoch,
        best_val,
        test_at_best,
        zero_norm_rows: zero_norm_total,
    })
}

/// Accuracy of a trained state on arbitrary node masks.
pub fn predict_node<T: Scalar>(
    state: &ModelState<T>,
    stack: &PropagationStack<T>,
    labels: &[usize],
    mask: &[bool],
) -> Result<f64> {
    let (h, _) = attention_forward(&state.att_scorer, stack);
    let z = softmax_rows(&state.update.forward(&h));
    let preds: Vec<usize> = (0..z.rows()).map(|r| argmax_tie_lowest(z.row(r))).collect();
    accuracy(&preds, labels, Some(mask))
}

/// Task metric of a trained state on explicit evaluation pairs.
pub fn predict_link<T: Scalar>(
    state: &ModelState<T>,
    stack: &PropagationStack<T>,
    task: Task,
    pairs: &[(usize, usize)],
    labels: &[usize],
) -> Result<f64> {
    if task == Task::NodeClassification {
        return Err(Error::Config("predict_link needs a link task".into()));
    }
    for &(a, b) in pairs {
        if a >= stack.n() || b >= stack.n() {
            return Err(Error::Evaluation(format!("pair ({a}, {b}) references unknown node")));
        }
    }
    let (h, _) = attention_forward(&state.att_scorer, stack);
    let probs = softmax_rows(&state.update.forward(&gather_pair_rows(&h, pairs)));
    match task {
        Task::LinkExistence => auc(&class1_scores(&probs), &bool_labels(labels)),
        Task::LinkDirection => average_precision(&class1_scores(&probs), &bool_labels(labels)),
        Task::LinkThreeClass => {
            let preds: Vec<usize> =
                (0..probs.rows()).map(|r| argmax_tie_lowest(probs.row(r))).collect();
            accuracy(&preds, labels, None)
        }
        Task::NodeClassification => unreachable!(),
    }
}

/// Class probabilities of a trained state for every node (node task head).
pub fn soft_labels<T: Scalar>(state: &ModelState<T>, stack: &PropagationStack<T>) -> Mat<T> {
    let (h, _) = attention_forward(&state.att_scorer, stack);
    softmax_rows(&state.update.forward(&h))
}
