//! `encode-q` and `propagate`: the cacheable pre-processing stages.

use std::path::PathBuf;

use clap::Args;
use mapdg_core::encoding::{map_encode, read_q_tsv, write_q_tsv};
use mapdg_core::io::read_mat_csv;
use mapdg_core::magnetic::{
    assemble_star_mgo, build_symmetric_norm, propagate, save_stack, EdgePhaseAssignment, QStats,
};

use crate::commands::data::load_data;
use crate::fail::{require_file, stage, Result};
use crate::manifest::RunManifest;
use crate::Ctx;

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Graph bundle directory.
    #[arg(long)]
    data: PathBuf,
    /// Optional per-node class-probability CSV modulating the potentials.
    #[arg(long)]
    soft_labels: Option<PathBuf>,
}

pub fn cmd_encode(ctx: &Ctx, args: &EncodeArgs) -> Result<()> {
    const STAGE: &str = "encode";
    let g = load_data(STAGE, &args.data)?;
    let soft = match &args.soft_labels {
        Some(p) => {
            require_file(STAGE, p)?;
            Some(stage(STAGE, read_mat_csv::<f64>(p))?)
        }
        None => None,
    };
    let config = serde_json::json!({
        "data": args.data.display().to_string(),
        "soft_labels": args.soft_labels.as_ref().map(|p| p.display().to_string()),
    });
    let mut manifest = RunManifest::new(STAGE, ctx.seed, config);
    manifest.add_input_dir(&args.data)?;

    let (q, zero_norm_rows) =
        manifest.time("encode", || stage(STAGE, map_encode(&g, soft.as_ref())))?;
    let stats = QStats::from_values(&q.q_star);

    if ctx.dry_run {
        println!("dry-run ok: encode-q ({} pairs)", q.pairs.len());
        return Ok(());
    }
    std::fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| crate::fail::Failure::runtime(STAGE, e.to_string()))?;
    manifest.time("write", || stage(STAGE, write_q_tsv(&ctx.out_dir.join("q.tsv"), &g, &q)))?;
    manifest.write(&ctx.out_dir)?;
    println!(
        "{}",
        serde_json::json!({
            "pairs": q.pairs.len(),
            "zero_norm_rows": zero_norm_rows,
            "q_min": stats.min, "q_mean": stats.mean, "q_max": stats.max,
            "out": ctx.out_dir.display().to_string(),
        })
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    /// Graph bundle directory.
    #[arg(long)]
    data: PathBuf,
    /// Propagation depth.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Per-pair potentials from `encode-q` output.
    #[arg(long, conflicts_with = "fixed_q")]
    q_tsv: Option<PathBuf>,
    /// Uniform potential for every pair.
    #[arg(long)]
    fixed_q: Option<f64>,
}

pub fn cmd_propagate(ctx: &Ctx, args: &PropagateArgs) -> Result<()> {
    const STAGE: &str = "propagate";
    let g = load_data(STAGE, &args.data)?;
    let config = serde_json::json!({
        "data": args.data.display().to_string(),
        "k": args.k,
        "q_tsv": args.q_tsv.as_ref().map(|p| p.display().to_string()),
        "fixed_q": args.fixed_q,
    });
    let mut manifest = RunManifest::new(STAGE, ctx.seed, config);
    manifest.add_input_dir(&args.data)?;

    let phases = match (&args.q_tsv, args.fixed_q) {
        (Some(path), _) => {
            require_file(STAGE, path)?;
            manifest.add_input(path)?;
            let q = stage(STAGE, read_q_tsv::<f64>(path, &g))?;
            stage(STAGE, q.to_phases(&g))?
        }
        (None, Some(q)) => stage(STAGE, EdgePhaseAssignment::uniform(&g, q))?,
        // default: adaptive encoding without class information
        (None, None) => {
            let (q, _) = stage(STAGE, map_encode(&g, None))?;
            stage(STAGE, q.to_phases(&g))?
        }
    };
    let stats = QStats::from_values(phases.q());

    let stack = manifest.time("propagate", || -> Result<_> {
        let norm = build_symmetric_norm(&g);
        let mgo = stage(STAGE, assemble_star_mgo(&norm, &phases))?;
        stage(STAGE, propagate(&mgo, g.features(), args.k))
    })?;

    if ctx.dry_run {
        println!("dry-run ok: propagate (k={}, n={}, f={})", stack.k(), stack.n(), stack.f());
        return Ok(());
    }
    manifest.time("write", || stage(STAGE, save_stack(&ctx.out_dir, &stack, stats)))?;
    manifest.write(&ctx.out_dir)?;
    println!(
        "{}",
        serde_json::json!({
            "k": stack.k(), "n": stack.n(), "f": stack.f(),
            "q_min": stats.min, "q_mean": stats.mean, "q_max": stats.max,
            "out": ctx.out_dir.display().to_string(),
        })
    );
    Ok(())
}
