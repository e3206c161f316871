//! CLI failure type and the exit-code policy.
//!
//! Exit 2 marks problems the caller can fix before anything runs: bad
//! flags, malformed config, out-of-range values, missing files. Exit 1
//! marks runtime failures inside an otherwise valid run.

use mapdg_core::Error;
use std::path::Path;

#[derive(Debug)]
pub struct Failure {
    pub stage: String,
    pub msg: String,
    pub code: i32,
}

pub type Result<T> = std::result::Result<T, Failure>;

impl Failure {
    pub fn usage(stage: &str, msg: impl Into<String>) -> Self {
        Self { stage: stage.to_string(), msg: msg.into(), code: 2 }
    }

    pub fn runtime(stage: &str, msg: impl Into<String>) -> Self {
        Self { stage: stage.to_string(), msg: msg.into(), code: 1 }
    }

    pub fn from_core(stage: &str, err: Error) -> Self {
        let code = match &err {
            Error::Ingest { .. }
            | Error::Parameter(_)
            | Error::Range(_)
            | Error::Config(_)
            | Error::Shape(_) => 2,
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
            _ => 1,
        };
        Self { stage: stage.to_string(), msg: err.to_string(), code }
    }
}

/// Maps a core result into a CLI result under the given stage name.
pub fn stage<T>(name: &str, r: mapdg_core::Result<T>) -> Result<T> {
    r.map_err(|e| Failure::from_core(name, e))
}

/// Usage failure unless `path` names an existing file.
pub fn require_file(stage: &str, path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Failure::usage(stage, format!("missing file {}", path.display())));
    }
    Ok(())
}

/// Usage failure unless `dir` looks like a saved graph bundle.
pub fn require_bundle(stage: &str, dir: &Path) -> Result<()> {
    if !dir.join("graph.json").is_file() {
        return Err(Failure::usage(
            stage,
            format!("{} is not a graph bundle (no graph.json)", dir.display()),
        ));
    }
    Ok(())
}
