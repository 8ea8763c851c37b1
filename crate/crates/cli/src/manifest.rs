use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Run provenance, written last so its presence marks a complete run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub counters: Value,
    pub wall_clock_ms: u128,
}

impl RunManifest {
    pub fn new(command: &'static str, seed: u64, config: Value) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            counters: Value::Null,
            wall_clock_ms: 0,
        }
    }

    pub fn finish(mut self, out_dir: &Path, started: Instant) -> Result<PathBuf, CliError> {
        self.wall_clock_ms = started.elapsed().as_millis();
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        write_atomic(out_dir, "manifest.json", &(text + "\n"))
    }
}

/// Writes `name` under `dir` through a temp file and rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}
