//! Run provenance: config snapshot, input digests, seed, and stage timings.
//!
//! Every directory a command writes into receives exactly one
//! `manifest.json`; reruns overwrite it. Two runs whose manifests agree on
//! everything but timings produce byte-identical metric files at a fixed
//! thread count.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::fail::{Failure, Result};

#[derive(Serialize)]
struct StageTiming {
    stage: String,
    ms: u64,
}

#[derive(Serialize)]
pub struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    seed: u64,
    config: serde_json::Value,
    /// Input path -> SHA-256 of its bytes.
    inputs: BTreeMap<String, String>,
    timings: Vec<StageTiming>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: "mapdg",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            timings: Vec::new(),
        }
    }

    /// Records the digest of one input file.
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)
            .map_err(|e| Failure::runtime(&self.command, format!("hashing {}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Digests every regular file directly inside `dir` (bundle inputs).
    pub fn add_input_dir(&mut self, dir: &Path) -> Result<()> {
        let entries = std::fs::read_dir(dir)
            .map_err(|e| Failure::runtime(&self.command, format!("reading {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        for p in paths {
            self.add_input(&p)?;
        }
        Ok(())
    }

    /// Runs `f`, recording its wall-clock time under `stage`.
    pub fn time<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            ms: start.elapsed().as_millis() as u64,
        });
        out
    }

    /// Writes `manifest.json` into `dir`, creating the directory if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::runtime(&self.command, format!("creating {}: {e}", dir.display())))?;
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Failure::runtime(&self.command, e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), text)
            .map_err(|e| Failure::runtime(&self.command, format!("writing manifest: {e}")))?;
        Ok(())
    }
}

fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let read = file.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(hex)
}
