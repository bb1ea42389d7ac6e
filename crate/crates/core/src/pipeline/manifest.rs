//! Run manifest: configuration hash, stages run and artifact checksums.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub variant: String,
    pub seed: u64,
    pub config_sha256: String,
    pub delay_threshold_min: u32,
    pub board_quantile: f64,
    pub stages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub stage: String,
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to reproduce and verify a run. Contains no timings
/// or absolute paths, so identical runs give identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run: RunInfo,
    pub artifact: Vec<Artifact>,
    pub config: PipelineConfig,
}

pub const MANIFEST_FILE: &str = "manifest.toml";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(config: &PipelineConfig) -> Self {
        let spec = config.feature_spec();
        Self {
            run: RunInfo {
                variant: config.variant.name().to_string(),
                seed: config.seed,
                config_sha256: config.sha256(),
                delay_threshold_min: spec.delay_threshold_min,
                board_quantile: spec.board_quantile,
                stages: Vec::new(),
            },
            artifact: Vec::new(),
            config: config.canonical(),
        }
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    /// Recomputes every artifact checksum under `root`; returns the
    /// mismatching or missing paths.
    pub fn verify(&self, root: &Path) -> Vec<String> {
        self.artifact
            .iter()
            .filter(|a| sha256_file(&root.join(&a.path)).map_or(true, |h| h != a.sha256))
            .map(|a| a.path.clone())
            .collect()
    }
}
