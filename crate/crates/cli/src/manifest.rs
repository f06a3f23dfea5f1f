//! Run manifests: what was run, on which inputs, producing which outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use collatekit::{canonical, Error, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub tool_version: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
}

fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects provenance while a command runs.
pub struct Recorder {
    command: &'static str,
    seed: u64,
    started: DateTime<Utc>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Self {
            command,
            seed,
            started: Utc::now(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    /// Digests inputs up front so the manifest reflects what was read.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Train resolves its seed from the config file after reading inputs.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    pub fn primary_output(&self) -> Option<&Path> {
        self.outputs.first().map(PathBuf::as_path)
    }

    pub fn finish(self, config: Value, path: &Path) -> Result<()> {
        let mut outputs = BTreeMap::new();
        for out in &self.outputs {
            outputs.insert(out.display().to_string(), file_digest(out)?);
        }
        let manifest = RunManifest {
            command: self.command.to_string(),
            config,
            inputs: self.inputs,
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            started_at: timestamp(self.started),
            finished_at: timestamp(Utc::now()),
        };
        canonical::write(path, &manifest)
    }
}

/// `<out>.manifest.json` next to the primary output.
pub fn default_manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary.with_file_name(name)
}
