use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Record of one run: what was asked for and which bytes it read.
///
/// Contains nothing that varies between identical invocations (no clock, no
/// thread count, no host name).
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: C,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &'static str, config: C, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            seed,
            inputs: Vec::new(),
        }
    }

    /// Adds the digest of `path` unless it is already listed.
    pub fn digest(&mut self, path: &Path) -> CliResult<()> {
        let shown = path.display().to_string();
        if self.inputs.iter().any(|d| d.path == shown) {
            return Ok(());
        }
        let bytes = std::fs::read(path).map_err(|e| pmean::Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        self.inputs.push(InputDigest {
            path: shown,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
