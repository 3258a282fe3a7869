//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use cobrar_core::dataset::synthetic::BlockSpec;
use cobrar_core::dataset::SplitRatios;
use cobrar_core::training::{ConfigGrid, TrainConfig};
use cobrar_core::ModelKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    /// `UserID::MovieID::Rating::Timestamp`
    Movielens,
    /// `item,user,rating,timestamp`
    Amazon,
    /// Generated block-structured data; no file needed.
    Synthetic,
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Movielens => "movielens",
            DataFormat::Amazon => "amazon",
            DataFormat::Synthetic => "synthetic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision {other:?} (expected f32|f64)")),
        }
    }
}

fn default_k_core() -> usize {
    5
}

fn default_k() -> usize {
    5
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub format: DataFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "default_k_core")]
    pub k_core: usize,
    /// Seed of the per-user split.
    pub seed: u64,
    #[serde(default)]
    pub split: SplitRatios,
    /// Generator parameters for `format = "synthetic"`; the bundled spec when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<BlockSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub precision: Precision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    #[serde(default = "default_k")]
    pub k: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec { k: default_k() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_output_dir(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<ConfigGrid>,
    #[serde(default)]
    pub eval: EvalSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Overrides the configured output directory.
pub const OUTPUT_ROOT_ENV: &str = "COBRAR_OUTPUT_ROOT";

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Reads `path`, resolving relative paths inside it against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &cfg.dataset.path {
            if p.is_relative() {
                cfg.dataset.path = Some(base.join(p));
            }
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        match (d.format, &d.path) {
            (DataFormat::Synthetic, _) => {}
            (_, None) => bail!("dataset.path is required for format {}", d.format),
            (_, Some(p)) if !p.is_file() => bail!("dataset file {} does not exist", p.display()),
            _ => {}
        }
        if d.k_core == 0 {
            bail!("dataset.k_core must be at least 1");
        }
        d.split.validate()?;
        match (&self.train, &self.grid) {
            (Some(t), None) => t.validate()?,
            (None, Some(g)) => {
                if g.is_empty() {
                    bail!("grid has no lattice points");
                }
                for c in g.configs() {
                    c.validate()?;
                }
            }
            _ => bail!("exactly one of [train] and [grid] must be present"),
        }
        if self.eval.k == 0 {
            bail!("eval.k must be at least 1");
        }
        Ok(())
    }

    /// The grid to run: the `[grid]` section, or the single `[train]` config.
    pub fn lattice(&self) -> ConfigGrid {
        match (&self.grid, &self.train) {
            (Some(g), _) => g.clone(),
            (None, Some(t)) => ConfigGrid::singleton(t),
            (None, None) => unreachable!("validated config has train or grid"),
        }
    }

    pub fn override_train_seed(&mut self, seed: u64) {
        if let Some(t) = &mut self.train {
            t.seed = seed;
        }
        if let Some(g) = &mut self.grid {
            g.seed = vec![seed];
        }
    }

    /// Replaces `output.dir` with the value of [`OUTPUT_ROOT_ENV`] when it is set.
    pub fn apply_env_override(&mut self) {
        if let Some(v) = std::env::var_os(OUTPUT_ROOT_ENV).filter(|v| !v.is_empty()) {
            self.output.dir = PathBuf::from(v);
        }
    }

    pub fn output_root(&self) -> PathBuf {
        self.output.dir.clone()
    }

    /// Cache directory of the prepared dataset, keyed by the dataset section.
    pub fn cache_dir(&self) -> Result<PathBuf> {
        let key = hash_hex(&toml::to_string(&self.dataset)?);
        Ok(self.output_root().join("data").join(format!("{}-{}", self.dataset.format, key)))
    }

    /// Run directory, keyed by everything except the output location.
    pub fn run_dir(&self) -> Result<PathBuf> {
        let mut keyed = self.clone();
        keyed.output = OutputSpec::default();
        let key = hash_hex(&keyed.to_toml()?);
        Ok(self.output_root().join("runs").join(format!("{}-{}", self.model.kind, key)))
    }
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn hash_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[dataset]
format = "synthetic"
seed = 7

[model]
kind = "cobrar"

[train]
learning_rate = 0.001
l2_weight = 0.0001
batch_size = 64
n_neg = 5
mu = 1e-6
dropout_rate = 0.1
max_epochs = 40
patience = 10
embedding_dim = 32
architecture = [64]
seed = 1
"#;

    #[test]
    fn defaults_and_round_trip() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.dataset.k_core, 5);
        assert_eq!(cfg.dataset.split, SplitRatios::default());
        assert_eq!(cfg.model.precision, Precision::F64);
        assert_eq!(cfg.eval.k, 5);
        cfg.validate().unwrap();
        let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn train_xor_grid() {
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        cfg.grid = Some(ConfigGrid::singleton(cfg.train.as_ref().unwrap()));
        assert!(cfg.validate().is_err());
        cfg.train = None;
        assert!(cfg.validate().is_ok());
        cfg.grid = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_dataset_file() {
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        cfg.dataset.format = DataFormat::Movielens;
        assert!(cfg.validate().is_err());
        cfg.dataset.path = Some("/definitely/not/here.dat".into());
        assert!(cfg.validate().unwrap_err().to_string().contains("does not exist"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse(&format!("{SAMPLE}\n[eval]\nk = 5\ntypo = 1\n")).is_err());
    }

    #[test]
    fn run_dir_ignores_output_location() {
        let mut a = ExperimentConfig::parse(SAMPLE).unwrap();
        let mut b = a.clone();
        a.output.dir = "/tmp/a".into();
        b.output.dir = "/tmp/b".into();
        assert_eq!(a.run_dir().unwrap().file_name(), b.run_dir().unwrap().file_name());
        b.override_train_seed(99);
        assert_ne!(a.run_dir().unwrap().file_name(), b.run_dir().unwrap().file_name());
    }
}
