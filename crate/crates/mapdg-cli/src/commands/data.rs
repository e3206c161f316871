//! `synth` and `ingest`: producing graph bundles.

use std::path::{Path, PathBuf};

use clap::Args;
use mapdg_core::graph::{
    generate_synthetic_with, ingest, save_bundle, split_by_counts, SplitSpec, SynthParams,
};
use mapdg_core::Digraph64;

use crate::fail::{require_file, stage, Failure, Result};
use crate::manifest::RunManifest;
use crate::Ctx;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Node count.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 5.0)]
    avg_degree: f64,
    /// Expected same-class endpoint fraction in [0, 1].
    #[arg(long)]
    homophily: f64,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 8)]
    feature_dim: usize,
    /// Separation of class means in feature space.
    #[arg(long)]
    mean_scale: Option<f64>,
    /// Per-dimension feature noise.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Fraction of cross-class edges oriented against the class cycle.
    #[arg(long)]
    direction_flip: Option<f64>,
    /// Attach count-based splits: training nodes per class.
    #[arg(long, requires = "val_count")]
    train_per_class: Option<usize>,
    /// Attach count-based splits: validation pool size.
    #[arg(long, requires = "train_per_class")]
    val_count: Option<usize>,
}

pub fn cmd_synth(ctx: &Ctx, args: &SynthArgs) -> Result<()> {
    const STAGE: &str = "synth";
    let mut params = SynthParams::default();
    if let Some(v) = args.mean_scale {
        params.mean_scale = v;
    }
    if let Some(v) = args.noise_sigma {
        params.noise_sigma = v;
    }
    if let Some(v) = args.direction_flip {
        params.direction_flip = v;
    }
    let config = serde_json::json!({
        "n": args.n,
        "avg_degree": args.avg_degree,
        "homophily": args.homophily,
        "classes": args.classes,
        "feature_dim": args.feature_dim,
        "mean_scale": params.mean_scale,
        "noise_sigma": params.noise_sigma,
        "direction_flip": params.direction_flip,
        "train_per_class": args.train_per_class,
        "val_count": args.val_count,
    });
    let mut manifest = RunManifest::new(STAGE, ctx.seed, config);

    let mut g = manifest.time("generate", || {
        stage(
            STAGE,
            generate_synthetic_with::<f64>(
                args.n,
                args.avg_degree,
                args.homophily,
                args.classes,
                args.feature_dim,
                ctx.seed,
                params,
            ),
        )
    })?;
    if let (Some(tpc), Some(val)) = (args.train_per_class, args.val_count) {
        let labels = g.labels().expect("generator labels every node").to_vec();
        let splits = stage(STAGE, split_by_counts(&labels, args.classes, tpc, val, ctx.seed))?;
        g = stage(STAGE, g.with_splits(splits))?;
    }

    if ctx.dry_run {
        println!("dry-run ok: synth (n={}, m={})", g.n(), g.m());
        return Ok(());
    }
    manifest.time("write", || -> Result<()> {
        std::fs::create_dir_all(&ctx.out_dir)
            .map_err(|e| Failure::runtime(STAGE, e.to_string()))?;
        stage(STAGE, save_bundle(&ctx.out_dir, &g))
    })?;
    manifest.write(&ctx.out_dir)?;
    println!(
        "{}",
        serde_json::json!({ "n": g.n(), "m": g.m(), "classes": g.num_classes(),
                            "out": ctx.out_dir.display().to_string() })
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Edge list file: one `u v` pair per line, `#` comments allowed.
    #[arg(long)]
    edges: PathBuf,
    /// Feature matrix: binary container or `rows,cols`-headed CSV.
    #[arg(long)]
    features: PathBuf,
    /// Label file: `node<TAB>class` lines.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Count-based splits: training nodes per class (needs labels).
    #[arg(long, requires = "val_count")]
    train_per_class: Option<usize>,
    #[arg(long, requires = "train_per_class")]
    val_count: Option<usize>,
    /// Explicit split files, one node id per line.
    #[arg(long, requires_all = ["split_val", "split_test"], conflicts_with = "train_per_class")]
    split_train: Option<PathBuf>,
    #[arg(long)]
    split_val: Option<PathBuf>,
    #[arg(long)]
    split_test: Option<PathBuf>,
}

pub fn cmd_ingest(ctx: &Ctx, args: &IngestArgs) -> Result<()> {
    const STAGE: &str = "ingest";
    require_file(STAGE, &args.edges)?;
    require_file(STAGE, &args.features)?;
    if let Some(p) = &args.labels {
        require_file(STAGE, p)?;
    }
    let split = match (&args.train_per_class, &args.split_train) {
        (Some(tpc), _) => Some(SplitSpec::Counts {
            train_per_class: *tpc,
            val: args.val_count.expect("clap enforces val_count"),
            seed: ctx.seed,
        }),
        (_, Some(train)) => {
            let val = args.split_val.clone().expect("clap enforces split_val");
            let test = args.split_test.clone().expect("clap enforces split_test");
            for p in [train, &val, &test] {
                require_file(STAGE, p)?;
            }
            Some(SplitSpec::Files { train: train.clone(), val, test })
        }
        _ => None,
    };

    let config = serde_json::json!({
        "edges": args.edges.display().to_string(),
        "features": args.features.display().to_string(),
        "labels": args.labels.as_ref().map(|p| p.display().to_string()),
        "train_per_class": args.train_per_class,
        "val_count": args.val_count,
    });
    let mut manifest = RunManifest::new(STAGE, ctx.seed, config);
    manifest.add_input(&args.edges)?;
    manifest.add_input(&args.features)?;
    if let Some(p) = &args.labels {
        manifest.add_input(p)?;
    }

    let (g, report): (Digraph64, _) = manifest.time("ingest", || {
        stage(
            STAGE,
            ingest::<f64>(&args.edges, &args.features, args.labels.as_deref(), split.as_ref()),
        )
    })?;

    if ctx.dry_run {
        println!("dry-run ok: ingest (n={}, m={})", g.n(), g.m());
        return Ok(());
    }
    manifest.time("write", || stage(STAGE, save_bundle(&ctx.out_dir, &g)))?;
    manifest.write(&ctx.out_dir)?;
    println!(
        "{}",
        serde_json::json!({
            "n": g.n(), "m": g.m(),
            "duplicate_edges": report.duplicate_edges,
            "self_loops_dropped": report.self_loops_dropped,
            "one_based_ids": report.one_based_ids,
            "out": ctx.out_dir.display().to_string(),
        })
    );
    Ok(())
}

/// Loads a bundle for a downstream command, tagging failures with `stage`.
pub fn load_data(stage_name: &str, dir: &Path) -> Result<Digraph64> {
    crate::fail::require_bundle(stage_name, dir)?;
    stage(stage_name, mapdg_core::graph::load_bundle::<f64>(dir))
}
