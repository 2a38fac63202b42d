//! Run manifests: enough resolved configuration to re-execute a run
//! bit-identically, written as one JSON file per run.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;

use crate::io::write_atomic;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command: &str,
        seed: u64,
        config: &C,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
        started: Instant,
    ) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config)?,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            duration_seconds: started.elapsed().as_secs_f64(),
        })
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        write_atomic(
            &out_dir.join("manifest.json"),
            &(serde_json::to_string_pretty(self)? + "\n"),
        )
    }
}
