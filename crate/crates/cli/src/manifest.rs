use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use affectsim::Config;

use crate::commands::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Record of one command invocation. Holds no timestamps so that repeated
/// runs produce identical files.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub config_hash: Option<String>,
    pub seeds: Vec<u64>,
    pub out_dir: String,
    /// Paths relative to `out_dir`.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, config: Option<&Config>, seeds: Vec<u64>, out_dir: &Path) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config.map(config_hash),
            seeds,
            out_dir: out_dir.to_string_lossy().into_owned(),
            outputs: Vec::new(),
        }
    }

    /// Checks that every listed output exists, then writes the manifest.
    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        for rel in &self.outputs {
            if !out_dir.join(rel).is_file() {
                return Err(CliError::Runtime(format!("expected output {rel} is missing")));
            }
        }
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        let path = out_dir.join(MANIFEST_NAME);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

/// SHA-256 of the seed-free canonical form of a configuration.
pub fn config_hash(config: &Config) -> String {
    hex::encode(Sha256::digest(config.canonical_json().as_bytes()))
}
