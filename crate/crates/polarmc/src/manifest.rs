//! Run manifests: every output embeds the command, its full configuration,
//! the tool version, input digests, and timing, so results are
//! reproducible from the file alone.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    pub timestamp_unix: u64,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub struct ManifestBuilder {
    command: String,
    config: serde_json::Value,
    inputs: Vec<InputDigest>,
    started: std::time::Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: serde_json::Value) -> ManifestBuilder {
        ManifestBuilder {
            command: command.to_string(),
            config,
            inputs: Vec::new(),
            started: std::time::Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: format!("{:x}", hasher.finalize()),
        });
    }

    pub fn finish(self) -> RunManifest {
        RunManifest {
            command: self.command,
            config: self.config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: self.inputs,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            elapsed_ms: self.started.elapsed().as_millis(),
        }
    }
}
