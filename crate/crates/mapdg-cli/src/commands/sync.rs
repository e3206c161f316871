//! `sync`: attribute-synchronization noise sweeps.

use std::path::PathBuf;

use clap::Args;
use mapdg_core::sync::{seed_csv_text, sweep_csv_text, sync_noise_sweep, sync_seed_runs};

use crate::fail::{stage, Failure, Result};
use crate::manifest::RunManifest;
use crate::Ctx;

#[derive(Debug, Args)]
pub struct SyncArgs {
    /// Problem sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Reliable-pair fractions in [0, 1], comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    /// Seeds per (n, p) cell; one CSV row each unless aggregating.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Emit one mean row per (n, p) cell instead of per-seed rows.
    #[arg(long)]
    aggregate: bool,
    /// Write the CSV here (default: stdout, no files at all).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

pub fn cmd_sync(ctx: &Ctx, args: &SyncArgs) -> Result<()> {
    const STAGE: &str = "sync";
    for &p in &args.p {
        if !(0.0..=1.0).contains(&p) {
            return Err(Failure::usage(STAGE, format!("reliable fraction {p} outside [0, 1]")));
        }
    }
    for &n in &args.n {
        if n < 2 {
            return Err(Failure::usage(STAGE, format!("problem size {n} too small")));
        }
    }
    if args.seeds == 0 {
        return Err(Failure::usage(STAGE, "--seeds must be at least 1"));
    }
    if ctx.dry_run {
        println!(
            "dry-run ok: sync ({} cells x {} seeds)",
            args.n.len() * args.p.len(),
            args.seeds
        );
        return Ok(());
    }

    let seeds: Vec<u64> = (0..args.seeds as u64).map(|i| ctx.seed + i).collect();
    let config = serde_json::json!({
        "n": args.n, "p": args.p, "seeds": args.seeds,
        "aggregate": args.aggregate, "tol": args.tol, "max_iter": args.max_iter,
    });
    let mut manifest = RunManifest::new(STAGE, ctx.seed, config);

    let csv = manifest.time("sweep", || -> Result<String> {
        if args.aggregate {
            let rows =
                stage(STAGE, sync_noise_sweep::<f64>(&args.n, &args.p, &seeds, args.tol, args.max_iter))?;
            Ok(sweep_csv_text(&rows))
        } else {
            let rows =
                stage(STAGE, sync_seed_runs::<f64>(&args.n, &args.p, &seeds, args.tol, args.max_iter))?;
            Ok(seed_csv_text(&rows))
        }
    })?;

    match &args.out {
        Some(path) => {
            std::fs::create_dir_all(&ctx.out_dir)
                .map_err(|e| Failure::runtime(STAGE, e.to_string()))?;
            let target =
                if path.is_absolute() { path.clone() } else { ctx.out_dir.join(path) };
            std::fs::write(&target, &csv).map_err(|e| Failure::runtime(STAGE, e.to_string()))?;
            manifest.write(&ctx.out_dir)?;
            println!("{}", serde_json::json!({ "rows": csv.lines().count() - 1,
                                               "out": target.display().to_string() }));
        }
        None => print!("{csv}"),
    }
    Ok(())
}
