//! `train`, `eval`, and `qcompare`: the learning stages.

use std::path::PathBuf;

use clap::Args;
use mapdg_core::graph::{ingest, split_by_counts, SplitSpec};
use mapdg_core::io::write_jsonl;
use mapdg_core::magnetic::{
    assemble_star_mgo, build_symmetric_norm, propagate, EdgePhaseAssignment, QStats,
};
use mapdg_core::model::{
    load_checkpoint, make_link_split, predict_link, predict_node, save_checkpoint, train,
    Task, TrainConfig,
};
use mapdg_core::Digraph64;

use crate::commands::data::load_data;
use crate::fail::{require_file, stage, Failure, Result};
use crate::manifest::RunManifest;
use crate::spec::{
    load_config, merge_train_config, parse_strategy, parse_task, strategy_token, DataSection,
    FileConfig, TrainOverrides,
};
use crate::Ctx;

#[derive(Debug, Args, Clone)]
pub struct DataFlags {
    /// Graph bundle directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Raw edge list (runs ingestion before training).
    #[arg(long, requires = "features", conflicts_with = "data")]
    edges: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Count-based splits: training nodes per class.
    #[arg(long, requires = "val_count")]
    train_per_class: Option<usize>,
    #[arg(long, requires = "train_per_class")]
    val_count: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct TrainFlags {
    /// Propagation depth.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Re-encode period for adaptive strategies.
    #[arg(long)]
    re_encode_every: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    /// Potential strategy token: fixed(q), edges(r), ring(k), perturb(e),
    /// map, map++.
    #[arg(long)]
    strategy: Option<String>,
    /// Task token: node-classification, link-existence, link-direction,
    /// link-three-class.
    #[arg(long)]
    task: Option<String>,
}

impl TrainFlags {
    fn overrides(&self, stage_name: &str, seed: Option<u64>) -> Result<TrainOverrides> {
        Ok(TrainOverrides {
            k: self.k,
            epochs: self.epochs,
            re_encode_every: self.re_encode_every,
            lr: self.lr,
            weight_decay: self.weight_decay,
            patience: self.patience,
            strategy: match &self.strategy {
                Some(tok) => Some(parse_strategy(stage_name, tok)?),
                None => None,
            },
            task: match &self.task {
                Some(tok) => Some(parse_task(stage_name, tok)?),
                None => None,
            },
            seed,
        })
    }
}

/// Merged view of the data section: CLI flags override config fields.
fn effective_data(flags: &DataFlags, file: &DataSection) -> DataSection {
    DataSection {
        bundle: flags.data.clone().or_else(|| file.bundle.clone()),
        edges: flags.edges.clone().or_else(|| file.edges.clone()),
        features: flags.features.clone().or_else(|| file.features.clone()),
        labels: flags.labels.clone().or_else(|| file.labels.clone()),
        train_per_class: flags.train_per_class.or(file.train_per_class),
        val_count: flags.val_count.or(file.val_count),
    }
}

/// Loads the graph named by a data section, registering inputs with the
/// manifest. Raw files take the ingest path; a bundle loads directly. CLI
/// raw flags beat a config bundle.
fn resolve_graph(
    stage_name: &str,
    data: &DataSection,
    seed: u64,
    manifest: &mut RunManifest,
) -> Result<Digraph64> {
    let mut g = if let Some(edges) = &data.edges {
        let features = data
            .features
            .as_ref()
            .ok_or_else(|| Failure::usage(stage_name, "raw data needs --features"))?;
        require_file("ingest", edges)?;
        require_file("ingest", features)?;
        if let Some(p) = &data.labels {
            require_file("ingest", p)?;
        }
        manifest.add_input(edges)?;
        manifest.add_input(features)?;
        if let Some(p) = &data.labels {
            manifest.add_input(p)?;
        }
        let split = data.train_per_class.zip(data.val_count).map(|(tpc, val)| {
            SplitSpec::Counts { train_per_class: tpc, val, seed }
        });
        let (g, _) = stage(
            "ingest",
            ingest::<f64>(edges, features, data.labels.as_deref(), split.as_ref()),
        )?;
        return Ok(g);
    } else if let Some(dir) = &data.bundle {
        manifest.add_input_dir(dir)?;
        load_data(stage_name, dir)?
    } else {
        return Err(Failure::usage(
            stage_name,
            "no input data: pass --data or --edges/--features (or a config data section)",
        ));
    };
    // bundles may carry splits already; explicit counts re-derive them
    if let (Some(tpc), Some(val)) = (data.train_per_class, data.val_count) {
        let labels = g
            .labels()
            .ok_or_else(|| Failure::usage(stage_name, "count-based splits need labels"))?
            .to_vec();
        let splits = stage(stage_name, split_by_counts(&labels, g.num_classes(), tpc, val, seed))?;
        g = stage(stage_name, g.with_splits(splits))?;
    }
    Ok(g)
}

fn config_snapshot(data: &DataSection, cfg: &TrainConfig) -> serde_json::Value {
    serde_json::json!({ "data": data, "train": cfg })
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    data: DataFlags,
    #[command(flatten)]
    train: TrainFlags,
}

pub fn cmd_train(ctx: &Ctx, args: &TrainArgs) -> Result<()> {
    const STAGE: &str = "train";
    let file: FileConfig = match &ctx.config {
        Some(p) => load_config(STAGE, p)?,
        None => FileConfig::default(),
    };
    let cfg = merge_train_config(file.train.clone(), &args.train.overrides(STAGE, ctx.seed_flag)?);
    stage("config", cfg.validate())?;
    let data = effective_data(&args.data, &file.data);

    let mut manifest = RunManifest::new(STAGE, cfg.seed, config_snapshot(&data, &cfg));
    let g = resolve_graph(STAGE, &data, cfg.seed, &mut manifest)?;

    if ctx.dry_run {
        println!("dry-run ok: train (n={}, m={}, {})", g.n(), g.m(), strategy_token(&cfg.strategy));
        return Ok(());
    }

    let out = manifest.time("train", || stage(STAGE, train(&g, &cfg)))?;
    manifest.time("write", || -> Result<()> {
        std::fs::create_dir_all(&ctx.out_dir).map_err(|e| Failure::runtime(STAGE, e.to_string()))?;
        stage(STAGE, write_jsonl(&ctx.out_dir.join("metrics.jsonl"), &out.log))?;
        stage(
            STAGE,
            save_checkpoint(&ctx.out_dir.join("ckpt.bin"), &cfg, &out.state, &out.q_star),
        )
    })?;
    manifest.write(&ctx.out_dir)?;
    println!(
        "{}",
        serde_json::json!({
            "best_epoch": out.best_epoch,
            "best_val": out.best_val,
            "test_at_best": out.test_at_best,
            "zero_norm_rows": out.zero_norm_rows,
            "out": ctx.out_dir.display().to_string(),
        })
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Graph bundle directory.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint written by `train`.
    #[arg(long)]
    checkpoint: PathBuf,
}

/// Rebuilds the propagation stack a checkpoint was trained against and
/// reports its task metric on the validation and test selections.
pub fn cmd_eval(ctx: &Ctx, args: &EvalArgs) -> Result<()> {
    const STAGE: &str = "eval";
    require_file(STAGE, &args.checkpoint)?;
    let g = load_data(STAGE, &args.data)?;
    let (cfg, state, q_star) = stage(STAGE, load_checkpoint::<f64>(&args.checkpoint))?;

    let config = serde_json::json!({
        "data": args.data.display().to_string(),
        "checkpoint": args.checkpoint.display().to_string(),
        "train": cfg,
    });
    let mut manifest = RunManifest::new(STAGE, cfg.seed, config);
    manifest.add_input_dir(&args.data)?;
    manifest.add_input(&args.checkpoint)?;

    if ctx.dry_run {
        println!("dry-run ok: eval (epoch {})", state.epoch);
        return Ok(());
    }

    let rebuild = |gp: &Digraph64| -> Result<_> {
        let phases = stage(STAGE, EdgePhaseAssignment::new(gp, q_star.clone()))?;
        let norm = build_symmetric_norm(gp);
        let mgo = stage(STAGE, assemble_star_mgo(&norm, &phases))?;
        stage(STAGE, propagate(&mgo, gp.features(), cfg.k))
    };
    let (val_metric, test_metric) = manifest.time("eval", || -> Result<(f64, f64)> {
        match cfg.task {
            Task::NodeClassification => {
                let stack = rebuild(&g)?;
                let labels = g
                    .labels()
                    .ok_or_else(|| Failure::usage(STAGE, "bundle has no labels"))?;
                let splits = g
                    .splits()
                    .ok_or_else(|| Failure::usage(STAGE, "bundle has no splits"))?;
                Ok((
                    stage(STAGE, predict_node(&state, &stack, labels, &splits.val))?,
                    stage(STAGE, predict_node(&state, &stack, labels, &splits.test))?,
                ))
            }
            task => {
                // the split and its pruned propagation graph are functions
                // of (graph, task, seed), so training's view is recovered
                let split = stage(STAGE, make_link_split(&g, task, cfg.seed))?;
                let stack = rebuild(&split.prop_graph)?;
                Ok((
                    stage(
                        STAGE,
                        predict_link(&state, &stack, task, &split.val_pairs, &split.val_labels),
                    )?,
                    stage(
                        STAGE,
                        predict_link(&state, &stack, task, &split.test_pairs, &split.test_labels),
                    )?,
                ))
            }
        }
    })?;

    let summary = serde_json::json!({
        "task": cfg.task,
        "strategy": strategy_token(&cfg.strategy),
        "epoch": state.epoch,
        "val_metric": val_metric,
        "test_metric": test_metric,
    });
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| Failure::runtime(STAGE, e.to_string()))?;
    std::fs::write(
        ctx.out_dir.join("eval.json"),
        serde_json::to_string_pretty(&summary).expect("json value"),
    )
    .map_err(|e| Failure::runtime(STAGE, e.to_string()))?;
    manifest.write(&ctx.out_dir)?;
    println!("{summary}");
    Ok(())
}

#[derive(Debug, Args)]
pub struct QcompareArgs {
    #[command(flatten)]
    data: DataFlags,
    #[command(flatten)]
    train: TrainFlags,
    /// Comma-separated strategy tokens to compare.
    #[arg(long, value_delimiter = ',', required = true)]
    strategies: Vec<String>,
    /// Number of seeds per strategy (seed values base..base+count).
    #[arg(long, default_value_t = 5)]
    seeds: usize,
}

struct CompareRow {
    token: String,
    mean: f64,
    std: f64,
    q: QStats,
}

/// Trains the same backbone once per (strategy, seed) and tabulates the
/// test metric mean and spread.
pub fn cmd_qcompare(ctx: &Ctx, args: &QcompareArgs) -> Result<()> {
    const STAGE: &str = "qcompare";
    if args.seeds == 0 {
        return Err(Failure::usage(STAGE, "--seeds must be at least 1"));
    }
    let strategies: Vec<_> = args
        .strategies
        .iter()
        .map(|tok| parse_strategy(STAGE, tok))
        .collect::<Result<_>>()?;
    let file: FileConfig = match &ctx.config {
        Some(p) => load_config(STAGE, p)?,
        None => FileConfig::default(),
    };
    let base_cfg =
        merge_train_config(file.train.clone(), &args.train.overrides(STAGE, ctx.seed_flag)?);
    stage("config", base_cfg.validate())?;
    let data = effective_data(&args.data, &file.data);

    let config = serde_json::json!({
        "data": data,
        "train": base_cfg,
        "strategies": args.strategies,
        "seeds": args.seeds,
    });
    let mut manifest = RunManifest::new(STAGE, base_cfg.seed, config);
    let g = resolve_graph(STAGE, &data, base_cfg.seed, &mut manifest)?;

    if ctx.dry_run {
        println!("dry-run ok: qcompare ({} strategies x {} seeds)", strategies.len(), args.seeds);
        return Ok(());
    }

    let mut rows: Vec<CompareRow> = Vec::with_capacity(strategies.len());
    for s in &strategies {
        let token = strategy_token(s);
        let accs = manifest.time(&token, || -> Result<Vec<(f64, QStats)>> {
            (0..args.seeds)
                .map(|i| {
                    let mut cfg = base_cfg.clone();
                    cfg.strategy = *s;
                    cfg.seed = base_cfg.seed + i as u64;
                    let out = stage(STAGE, train(&g, &cfg))?;
                    Ok((out.test_at_best, QStats::from_values(&out.q_star)))
                })
                .collect()
        })?;
        let mean = accs.iter().map(|(a, _)| a).sum::<f64>() / accs.len() as f64;
        let var =
            accs.iter().map(|(a, _)| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64;
        let agg = |pick: fn(&QStats) -> f64| {
            accs.iter().map(|(_, q)| pick(q)).sum::<f64>() / accs.len() as f64
        };
        rows.push(CompareRow {
            token,
            mean,
            std: var.sqrt(),
            q: QStats { min: agg(|q| q.min), mean: agg(|q| q.mean), max: agg(|q| q.max) },
        });
    }

    let mut csv = String::from("strategy,seeds,mean_metric,std_metric,q_min,q_mean,q_max\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.token, args.seeds, r.mean, r.std, r.q.min, r.q.mean, r.q.max
        ));
    }
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| Failure::runtime(STAGE, e.to_string()))?;
    std::fs::write(ctx.out_dir.join("comparison.csv"), &csv)
        .map_err(|e| Failure::runtime(STAGE, e.to_string()))?;
    manifest.write(&ctx.out_dir)?;

    println!("{:<18} {:>5} {:>8} {:>8} {:>8}", "strategy", "seeds", "mean", "std", "q_mean");
    for r in &rows {
        println!(
            "{:<18} {:>5} {:>8.4} {:>8.4} {:>8.4}",
            r.token, args.seeds, r.mean, r.std, r.q.mean
        );
    }
    Ok(())
}
