use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use cobrar_core::dataset::DatasetFingerprint;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

/// Audit record of one command invocation, written when it starts and rewritten when
/// it ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub status: RunStatus,
    pub version: String,
    pub started_unix: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_unix: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_secs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<DatasetFingerprint>,
    /// Artifact name -> path.
    #[serde(default)]
    pub artifacts: BTreeMap<String, PathBuf>,
    pub config: ExperimentConfig,
    #[serde(skip)]
    clock: Option<Instant>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, config: &ExperimentConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            status: RunStatus::Running,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: None,
            elapsed_secs: None,
            error: None,
            fingerprint: None,
            artifacts: BTreeMap::new(),
            config: config.clone(),
            clock: Some(Instant::now()),
        }
    }

    pub fn finish(&mut self, status: RunStatus, error: Option<String>) {
        self.status = status;
        self.error = error;
        self.finished_unix = Some(unix_now());
        self.elapsed_secs = self.clock.map(|c| c.elapsed().as_secs_f64());
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, toml::to_string(self)?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(toml::from_str(&text)?)
    }
}
