//! Per-stage run manifests: the config hash plus input and output file
//! hashes. A stage whose manifest still matches on disk can be skipped
//! on resume, and the manifest alone carries everything needed to
//! re-execute the stage in isolation.

use crate::error::CliResult;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path)?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub tool_version: String,
    pub config_hash: String,
    /// Paths relative to the output directory (inputs outside it keep
    /// their given relative names).
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl StageManifest {
    pub fn new(stage: &str, config_hash: String) -> Self {
        StageManifest {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, out_dir: &Path, path: &Path) -> CliResult<()> {
        self.inputs.insert(relative_name(out_dir, path), hash_file(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, out_dir: &Path, path: &Path) -> CliResult<()> {
        self.outputs.insert(relative_name(out_dir, path), hash_file(path)?);
        Ok(())
    }

    pub fn path_for(out_dir: &Path, stage: &str) -> PathBuf {
        out_dir.join("manifests").join(format!("{stage}.json"))
    }

    pub fn save(&self, out_dir: &Path) -> CliResult<()> {
        let path = Self::path_for(out_dir, &self.stage);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::CliError::Internal(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(out_dir: &Path, stage: &str) -> Option<StageManifest> {
        let text = std::fs::read_to_string(Self::path_for(out_dir, stage)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// True when this manifest still describes the files on disk: same
    /// config, same inputs, and every output present and unchanged.
    pub fn still_valid(&self, out_dir: &Path, config_hash: &str) -> bool {
        if self.config_hash != config_hash {
            return false;
        }
        let check = |entries: &BTreeMap<String, String>| {
            entries.iter().all(|(name, expected)| {
                hash_file(&out_dir.join(name)).map(|h| &h == expected).unwrap_or(false)
            })
        };
        check(&self.inputs) && check(&self.outputs)
    }
}

fn relative_name(out_dir: &Path, path: &Path) -> String {
    path.strip_prefix(out_dir)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}
