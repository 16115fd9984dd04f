//! Run provenance.
//!
//! Every artifact-producing subcommand writes a `<output>.manifest.toml`
//! next to its primary output, recording the exact invocation, the
//! resolved configuration, seeds, input/output paths, the tool version,
//! and wall time — enough to re-run the stage or audit a result chain.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// The invocation, argv joined by spaces.
    pub command: String,
    pub version: String,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    /// Resolved configuration values the run actually used.
    pub config: BTreeMap<String, String>,
}

/// Collects manifest fields while a subcommand runs.
pub struct ManifestBuilder {
    started: Instant,
    seeds: Vec<u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    config: BTreeMap<String, String>,
}

impl ManifestBuilder {
    pub fn new() -> Self {
        ManifestBuilder {
            started: Instant::now(),
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: BTreeMap::new(),
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seeds.push(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.into(), value.to_string());
        self
    }

    /// Writes `<primary>.manifest.toml` next to the primary output.
    pub fn write(&self, primary: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: std::env::args().collect::<Vec<_>>().join(" "),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: self.seeds.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            config: self.config.clone(),
        };
        let text = toml::to_string_pretty(&manifest).context("serializing manifest")?;
        let path = manifest_path(primary);
        std::fs::write(&path, text)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}

/// `<artifact>.manifest.toml` for an artifact path.
pub fn manifest_path(artifact: &Path) -> std::path::PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.toml");
    artifact.with_file_name(name)
}
