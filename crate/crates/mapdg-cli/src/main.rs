//! Batch harness for the directed-graph representation toolkit.
//!
//! One command per process; every stage reads and writes plain files so
//! expensive steps (encoding, propagation) can be cached and reused across
//! training runs. All randomness in a run flows from one root seed, and
//! each output directory records a `manifest.json` with the exact config,
//! input digests, and stage timings that produced it.
//!
//! Exit codes: 0 success, 2 usage or validation problems (bad flags,
//! malformed config, missing files), 1 runtime failures. Errors print one
//! machine-parsable line: `error: stage=<name>: <reason>`.

mod commands;
mod fail;
mod manifest;
mod spec;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::data::{cmd_ingest, cmd_synth, IngestArgs, SynthArgs};
use commands::encode::{cmd_encode, cmd_propagate, EncodeArgs, PropagateArgs};
use commands::sync::{cmd_sync, SyncArgs};
use commands::train::{cmd_eval, cmd_qcompare, cmd_train, EvalArgs, QcompareArgs, TrainArgs};
use fail::{Failure, Result};

#[derive(Parser)]
#[command(name = "mapdg", version, about = "Directed-graph representation learning pipeline")]
struct Cli {
    /// JSON config file (data and training sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for all randomness (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count (default: MAPDG_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = "mapdg-out")]
    out_dir: PathBuf,
    /// Validate inputs and config, then exit without touching anything.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic labeled digraph bundle.
    Synth(SynthArgs),
    /// Build a graph bundle from raw edge/feature/label files.
    Ingest(IngestArgs),
    /// Compute adaptive per-pair potentials for a bundle.
    #[command(name = "encode-q")]
    EncodeQ(EncodeArgs),
    /// Precompute and store the propagation stack for a bundle.
    Propagate(PropagateArgs),
    /// Train a classifier; accepts a bundle or raw files (full pipeline).
    Train(TrainArgs),
    /// Evaluate a checkpoint on a bundle.
    Eval(EvalArgs),
    /// Train the same backbone under several potential strategies.
    Qcompare(QcompareArgs),
    /// Attribute-synchronization noise sweeps (CSV output).
    Sync(SyncArgs),
}

/// Global flags every command sees.
pub struct Ctx {
    pub config: Option<PathBuf>,
    /// Effective root seed (flag or 0).
    pub seed: u64,
    /// The flag as given, for commands that distinguish "unset".
    pub seed_flag: Option<u64>,
    pub out_dir: PathBuf,
    pub dry_run: bool,
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = flag.or_else(|| {
        std::env::var("MAPDG_THREADS").ok().and_then(|s| s.parse().ok())
    });
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::usage("config", "thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::runtime("config", e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    let ctx = Ctx {
        config: cli.config,
        seed: cli.seed.unwrap_or(0),
        seed_flag: cli.seed,
        out_dir: cli.out_dir,
        dry_run: cli.dry_run,
    };
    match &cli.cmd {
        Cmd::Synth(a) => cmd_synth(&ctx, a),
        Cmd::Ingest(a) => cmd_ingest(&ctx, a),
        Cmd::EncodeQ(a) => cmd_encode(&ctx, a),
        Cmd::Propagate(a) => cmd_propagate(&ctx, a),
        Cmd::Train(a) => cmd_train(&ctx, a),
        Cmd::Eval(a) => cmd_eval(&ctx, a),
        Cmd::Qcompare(a) => cmd_qcompare(&ctx, a),
        Cmd::Sync(a) => cmd_sync(&ctx, a),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(f) = dispatch(cli) {
        let reason: String = f.msg.split_whitespace().collect::<Vec<_>>().join(" ");
        eprintln!("error: stage={}: {reason}", f.stage);
        std::process::exit(f.code);
    }
}
