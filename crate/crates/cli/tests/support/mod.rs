#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cobrar_cli::config::ExperimentConfig;

/// Small block dataset that trains in well under a second.
pub fn small_config(out: &Path, kind: &str, architecture: &[usize], seed: u64) -> ExperimentConfig {
    let dropout = if kind == "deepmf" { 0.0 } else { 0.1 };
    let arch = architecture.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
    let text = format!(
        r#"
[dataset]
format = "synthetic"
k_core = 2
seed = 3

[dataset.synthetic]
n_users = 40
n_items = 30
n_blocks = 3
p_in_max = 0.8
p_in_min = 0.3
p_out = 0.03
seed = 11

[model]
kind = "{kind}"
precision = "f64"

[train]
learning_rate = 0.003
l2_weight = 0.0001
batch_size = 32
n_neg = 3
mu = 1e-6
dropout_rate = {dropout}
max_epochs = 4
patience = 2
embedding_dim = 8
architecture = [{arch}]
seed = {seed}
"#
    );
    let mut cfg = ExperimentConfig::parse(&text).unwrap();
    cfg.output.dir = out.to_path_buf();
    cfg.validate().unwrap();
    cfg
}

/// Workspace root, two levels above this crate.
pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

/// Column `name` of a tab-separated table, one entry per data row.
pub fn column(table: &str, name: &str) -> Vec<String> {
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split('\t').nth(idx).unwrap().to_string()).collect()
}
