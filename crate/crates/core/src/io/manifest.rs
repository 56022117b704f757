//! JSON manifests written next to generated artifacts.
//!
//! A manifest records the seed, the resolved parameters and the tool
//! version that produced a set of files, plus a SHA-256 per output so a
//! later run can verify nothing drifted.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SciError};
use crate::rng::RNG_ALGORITHM;

pub const TOOL_NAME: &str = "sci-forge";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    /// Path relative to the manifest file.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub rng_algorithm: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub outputs: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(seed: u64, params: serde_json::Value) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            rng_algorithm: RNG_ALGORITHM.to_string(),
            seed,
            params,
            outputs: Vec::new(),
        }
    }

    /// Hashes `file` (relative to the manifest's directory-to-be) and
    /// appends it to the output list.
    pub fn record_output(&mut self, base_dir: &Path, rel_path: &str) -> Result<()> {
        let full = base_dir.join(rel_path);
        let sha = sha256_file(&full)?;
        self.outputs.push(ManifestEntry {
            path: rel_path.to_string(),
            sha256: sha,
        });
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| SciError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| SciError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| SciError::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{:02x}", b));
    }
    s
}

/// Re-hashes every file a manifest references and confirms it matches.
pub fn verify_manifest(manifest_path: &Path) -> Result<()> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    for entry in &manifest.outputs {
        let full = base.join(&entry.path);
        let actual = sha256_file(&full)?;
        if actual != entry.sha256 {
            return Err(SciError::ManifestMismatch(format!(
                "{}: recorded {}, found {}",
                entry.path, entry.sha256, actual
            )));
        }
    }
    Ok(())
}
