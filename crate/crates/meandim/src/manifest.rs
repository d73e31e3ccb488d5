//! Run manifests: every CLI invocation records its command line, input
//! hashes, seed, versions, and output hashes, so a run can be replayed and
//! its artifacts compared byte for byte.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Record of one CLI run. Replaying `command` must reproduce every output
/// byte-identically (wall time is informational only).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    /// argv, including the subcommand
    pub command: Vec<String>,
    /// input path → sha256 hex digest
    pub inputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// component → version string
    pub versions: BTreeMap<String, String>,
    /// output path → sha256 hex digest
    pub outputs: BTreeMap<String, String>,
    /// informational; not part of the reproducibility contract
    pub wall_ms: u64,
}

impl RunManifest {
    pub fn new(command: Vec<String>) -> RunManifest {
        let mut versions = BTreeMap::new();
        versions.insert("meandim".into(), env!("CARGO_PKG_VERSION").into());
        RunManifest {
            command,
            inputs: BTreeMap::new(),
            seed: None,
            versions,
            outputs: BTreeMap::new(),
            wall_ms: 0,
        }
    }

    /// Hash and record an input file, returning its contents so callers
    /// read it exactly once.
    pub fn record_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path)?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    /// Record an output by its content.
    pub fn record_output(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    pub fn finish(&mut self, started: Instant) {
        self.wall_ms = started.elapsed().as_millis() as u64;
    }
}

/// Hex-encoded SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write a file atomically: stage next to the destination, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let stage = path.with_extension(format!(
        "tmp.{}",
        std::process::id()
    ));
    if let Some(dir) = dir {
        if !dir.exists() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(&stage, bytes)?;
    std::fs::rename(&stage, path)?;
    Ok(())
}
