//! Output files and the run manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

/// A file produced by an experiment, held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// A replication or unit of work that failed without aborting the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub unit: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOutput {
    pub artifacts: Vec<Artifact>,
    pub failures: Vec<Failure>,
}

impl ExperimentOutput {
    pub fn push(&mut self, name: impl Into<String>, contents: String) {
        self.artifacts.push(Artifact { name: name.into(), contents });
    }

    pub fn fail(&mut self, unit: impl Into<String>, message: impl ToString) {
        self.failures.push(Failure { unit: unit.into(), message: message.to_string() });
    }

    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.artifacts.iter().find(|a| a.name == name).map(|a| a.contents.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSchedule {
    pub base_seed: u64,
    /// Human-readable description of how unit seeds derive from the base seed.
    pub rule: String,
    pub units: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub version: String,
    pub experiment: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub seed_schedule: SeedSchedule,
    pub outputs: Vec<OutputFile>,
    pub failures: Vec<Failure>,
    pub wall_time_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(kind: ExperimentKind, cfg: &ExperimentConfig, output: &ExperimentOutput, units: usize, wall_time_seconds: f64) -> Self {
        let config_text = cfg.to_toml_string();
        RunManifest {
            software: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            experiment: kind.name().into(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            config: cfg.clone(),
            seed_schedule: SeedSchedule {
                base_seed: cfg.base_seed,
                rule: "unit i (replication or day) uses seed base_seed + i; each random component \
                       of a unit draws from its own splitmix64-derived ChaCha8 stream"
                    .into(),
                units,
            },
            outputs: output
                .artifacts
                .iter()
                .map(|a| OutputFile { name: a.name.clone(), sha256: sha256_hex(a.contents.as_bytes()), bytes: a.contents.len() })
                .collect(),
            failures: output.failures.clone(),
            wall_time_seconds,
        }
    }
}

/// Writes every artifact and the manifest into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, output: &ExperimentOutput, manifest: &RunManifest) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for a in &output.artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.contents).map_err(io(&path))?;
    }
    let path = dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io(&path))
}
