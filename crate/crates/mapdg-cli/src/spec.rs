//! Config-file schema and strategy token parsing.
//!
//! A config file is JSON with two optional sections:
//!
//! ```json
//! {
//!   "data": { "bundle": "out/synth" },
//!   "train": { "k": 3, "epochs": 200, "strategy": "map", ... }
//! }
//! ```
//!
//! `data` either points at a saved bundle or at raw files (`edges`,
//! `features`, optional `labels`) plus an optional count-based split.
//! Command-line flags override file values field by field.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use mapdg_core::model::{Strategy, Task, TrainConfig};

use crate::fail::{Failure, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub bundle: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub train_per_class: Option<usize>,
    pub val_count: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub data: DataSection,
    pub train: Option<TrainConfig>,
}

pub fn load_config(stage: &str, path: &std::path::Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Failure::usage(stage, format!("missing file {}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(stage, format!("bad config {}: {e}", path.display())))
}

/// Parses one strategy token: `map`, `map++`, `fixed(0.25)`, `edges(1.0)`,
/// `ring(4)`, `perturb(0.5)`. Longer aliases of the baseline names are
/// accepted.
pub fn parse_strategy(stage: &str, token: &str) -> Result<Strategy> {
    let t = token.trim();
    let lower = t.to_ascii_lowercase();
    match lower.as_str() {
        "map" => return Ok(Strategy::Map),
        "map++" | "mapplusplus" => return Ok(Strategy::MapPlusPlus),
        _ => {}
    }
    let bad = || Failure::usage(stage, format!("unknown strategy '{t}'"));
    let (name, arg) = match (lower.find('('), lower.strip_suffix(')')) {
        (Some(open), Some(full)) => (&full[..open], &full[open + 1..]),
        _ => return Err(bad()),
    };
    let num = |raw: &str| -> Result<f64> {
        raw.trim()
            .parse::<f64>()
            .map_err(|_| Failure::usage(stage, format!("bad number in strategy '{t}'")))
    };
    match name {
        "fixed" => Ok(Strategy::Fixed { q: num(arg)? }),
        "edges" | "edges_baseline" => Ok(Strategy::EdgesBaseline { q_rel: num(arg)? }),
        "ring" | "ring_baseline" => {
            let k = arg
                .trim()
                .parse::<usize>()
                .map_err(|_| Failure::usage(stage, format!("bad ring length in '{t}'")))?;
            Ok(Strategy::RingBaseline { k })
        }
        "perturb" | "perturbation" | "perturbation_baseline" => {
            Ok(Strategy::PerturbationBaseline { epsilon: num(arg)? })
        }
        _ => Err(bad()),
    }
}

/// Short display form of a strategy, inverse of [`parse_strategy`].
pub fn strategy_token(s: &Strategy) -> String {
    match s {
        Strategy::Map => "map".into(),
        Strategy::MapPlusPlus => "map++".into(),
        Strategy::Fixed { q } => format!("fixed({q})"),
        Strategy::EdgesBaseline { q_rel } => format!("edges({q_rel})"),
        Strategy::RingBaseline { k } => format!("ring({k})"),
        Strategy::PerturbationBaseline { epsilon } => format!("perturb({epsilon})"),
    }
}

pub fn parse_task(stage: &str, token: &str) -> Result<Task> {
    serde_json::from_value(serde_json::Value::String(token.trim().to_string()))
        .map_err(|_| Failure::usage(stage, format!("unknown task '{token}'")))
}

/// Flag-level overrides applied on top of a config-file `train` section.
#[derive(Debug, Clone, Default)]
pub struct TrainOverrides {
    pub k: Option<usize>,
    pub epochs: Option<usize>,
    pub re_encode_every: Option<usize>,
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub patience: Option<usize>,
    pub strategy: Option<Strategy>,
    pub task: Option<Task>,
    pub seed: Option<u64>,
}

pub fn merge_train_config(base: Option<TrainConfig>, over: &TrainOverrides) -> TrainConfig {
    let mut cfg = base.unwrap_or_default();
    if let Some(v) = over.k {
        cfg.k = v;
    }
    if let Some(v) = over.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = over.re_encode_every {
        cfg.re_encode_every = v;
    }
    if let Some(v) = over.lr {
        cfg.lr = v;
    }
    if let Some(v) = over.weight_decay {
        cfg.weight_decay = v;
    }
    if let Some(v) = over.patience {
        cfg.patience = v;
    }
    if let Some(v) = over.strategy {
        cfg.strategy = v;
    }
    if let Some(v) = over.task {
        cfg.task = v;
    }
    if let Some(v) = over.seed {
        cfg.seed = v;
    }
    cfg
}
