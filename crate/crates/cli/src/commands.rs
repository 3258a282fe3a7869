use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cobrar_core::checkpoint::Checkpoint;
use cobrar_core::dataset::cache::{cache_exists, read_cache, write_cache};
use cobrar_core::dataset::synthetic::BlockSpec;
use cobrar_core::dataset::{
    binarize_and_dedup, k_core_filter, parse_amazon, parse_movielens, split_user_based, DatasetFingerprint,
    SplitDataset,
};
use cobrar_core::evaluation::{compare_user_metric, evaluate, Direction, EvalReport, Phase, Scorer};
use cobrar_core::training::{grid_search, ConfigGrid, GridRun, TrainError, TrainLog};
use cobrar_core::{param_count, ModelKind, ParamCount, Scalar};

use crate::config::{DataFormat, ExperimentConfig, Precision};
use crate::manifest::{RunManifest, RunStatus};
use crate::report::{aggregate_header, aggregate_row, comparison_table, ModelSummary};

pub const STATS_FILE: &str = "stats.tsv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const TRAIN_LOG_FILE: &str = "train_log.tsv";
pub const GRID_FILE: &str = "grid.tsv";

/// Dataset sizes after parsing and after k-core filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrepareStats {
    pub raw: (usize, usize, usize),
    pub filtered: (usize, usize, usize),
}

#[derive(Debug, Clone)]
pub struct PrepareOutcome {
    pub cache_dir: PathBuf,
    pub stats: PrepareStats,
    pub fingerprint: DatasetFingerprint,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<PrepareOutcome> {
    let d = &cfg.dataset;
    let raw = match d.format {
        DataFormat::Movielens => parse_movielens(d.path.as_deref().expect("validated"))?,
        DataFormat::Amazon => parse_amazon(d.path.as_deref().expect("validated"))?,
        DataFormat::Synthetic => d.synthetic.unwrap_or_else(BlockSpec::bundled).generate(),
    };
    let ds = binarize_and_dedup(&raw).context("binarizing interactions")?;
    let raw_counts = (ds.n_users(), ds.n_items(), ds.n_interactions());
    let ds = k_core_filter(&ds, d.k_core).with_context(|| format!("{}-core filtering", d.k_core))?;
    let split = split_user_based(&ds, d.split, d.seed)?;
    let cache_dir = cfg.cache_dir()?;
    write_cache(&cache_dir, &split)?;
    let stats = PrepareStats {
        raw: raw_counts,
        filtered: (ds.n_users(), ds.n_items(), ds.n_interactions()),
    };
    let table = format!(
        "stage\tn_users\tn_items\tn_interactions\nraw\t{}\t{}\t{}\nfiltered\t{}\t{}\t{}\n",
        stats.raw.0, stats.raw.1, stats.raw.2, stats.filtered.0, stats.filtered.1, stats.filtered.2
    );
    fs::write(cache_dir.join(STATS_FILE), table)?;
    Ok(PrepareOutcome {
        cache_dir,
        stats,
        fingerprint: split.fingerprint(),
    })
}

/// Loads the prepared cache, or explains how to create it.
pub fn load_prepared(cfg: &ExperimentConfig) -> Result<SplitDataset> {
    let dir = cfg.cache_dir()?;
    if !cache_exists(&dir) {
        bail!(
            "no prepared dataset cache at {}; run `cobrar prepare --config <config>` with this configuration first",
            dir.display()
        );
    }
    read_cache(&dir).with_context(|| format!("reading dataset cache {}", dir.display()))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub run_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub log: TrainLog,
    pub runs: Vec<GridRun>,
    pub best: usize,
}

/// Trains the configured model (or every grid point) and stores the best checkpoint,
/// its training log and a manifest in the run directory.
pub fn train(cfg: &ExperimentConfig, jobs: usize) -> Result<TrainOutcome> {
    let split = load_prepared(cfg)?;
    let run_dir = cfg.run_dir()?;
    fs::create_dir_all(&run_dir)?;
    let mut manifest = RunManifest::start("train", cfg);
    manifest.fingerprint = Some(split.fingerprint());
    manifest.write(&run_dir)?;

    let grid = cfg.lattice();
    let result = match cfg.model.precision {
        Precision::F32 => train_typed::<f32>(cfg, &split, &grid, jobs, &run_dir),
        Precision::F64 => train_typed::<f64>(cfg, &split, &grid, jobs, &run_dir),
    };
    match result {
        Ok(out) => {
            for (name, file) in [("checkpoint", CHECKPOINT_FILE), ("train_log", TRAIN_LOG_FILE), ("grid", GRID_FILE)] {
                manifest.artifacts.insert(name.into(), run_dir.join(file));
            }
            manifest.finish(RunStatus::Complete, None);
            manifest.write(&run_dir)?;
            Ok(out)
        }
        Err(e) => {
            if let Some(TrainError::NonFinite { log, .. }) = e.downcast_ref::<TrainError>() {
                let path = run_dir.join(TRAIN_LOG_FILE);
                fs::write(&path, log.to_tsv())?;
                manifest.artifacts.insert("partial_train_log".into(), path);
            }
            manifest.finish(RunStatus::Failed, Some(format!("{e:#}")));
            manifest.write(&run_dir)?;
            Err(e)
        }
    }
}

fn train_typed<T: Scalar>(
    cfg: &ExperimentConfig,
    split: &SplitDataset,
    grid: &ConfigGrid,
    jobs: usize,
    run_dir: &Path,
) -> Result<TrainOutcome> {
    let grid_dir = run_dir.join("grid");
    let several = grid.len() > 1;
    let outcome = grid_search::<T>(split, cfg.model.kind, grid, jobs, |run| {
        if several {
            // each lattice point writes only inside its own directory
            let dir = grid_dir.join(format!("{:04}", run.index));
            if fs::create_dir_all(&dir).is_ok() {
                let _ = fs::write(dir.join(TRAIN_LOG_FILE), run.log.to_tsv());
            }
        }
    })?;
    let best = outcome.best_run().clone();
    let checkpoint = run_dir.join(CHECKPOINT_FILE);
    Checkpoint::new(outcome.model, split.fingerprint(), Some(best.config.clone())).save(&checkpoint)?;
    fs::write(run_dir.join(TRAIN_LOG_FILE), best.log.to_tsv())?;
    fs::write(run_dir.join(GRID_FILE), grid_table(&outcome.runs, outcome.best))?;
    Ok(TrainOutcome {
        run_dir: run_dir.to_path_buf(),
        checkpoint,
        log: best.log,
        runs: outcome.runs,
        best: outcome.best,
    })
}

fn grid_table(runs: &[GridRun], best: usize) -> String {
    let mut out = String::from(
        "index\tarchitecture\tembedding_dim\tlearning_rate\tl2_weight\tdropout_rate\tbatch_size\tn_neg\tmu\tmax_epochs\tpatience\tseed\tparams\tbest_epoch\tval_ndcg_at_5\tis_best\n",
    );
    for r in runs {
        let c = &r.config;
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.index,
            join_sizes(&c.architecture),
            c.embedding_dim,
            c.learning_rate,
            c.l2_weight,
            c.dropout_rate,
            c.batch_size,
            c.n_neg,
            c.mu,
            c.max_epochs,
            c.patience,
            c.seed,
            r.params,
            r.log.best_epoch,
            r.val_ndcg(),
            u8::from(r.index == best)
        ));
    }
    out
}

pub fn join_sizes(sizes: &[usize]) -> String {
    sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// A checkpoint loaded at the precision it was written in.
pub enum LoadedModel {
    F32(Checkpoint<f32>),
    F64(Checkpoint<f64>),
}

impl LoadedModel {
    pub fn load(path: &Path) -> Result<Self> {
        let ck = Checkpoint::<f64>::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
        if ck.meta.scalar == f32::NAME {
            let ck = Checkpoint::<f32>::load(path)?;
            Ok(LoadedModel::F32(ck))
        } else {
            Ok(LoadedModel::F64(ck))
        }
    }

    pub fn meta(&self) -> &cobrar_core::checkpoint::CheckpointMeta {
        match self {
            LoadedModel::F32(c) => &c.meta,
            LoadedModel::F64(c) => &c.meta,
        }
    }

    pub fn scorer(&self, split: &SplitDataset) -> Result<Box<dyn Scorer>> {
        Ok(match self {
            LoadedModel::F32(c) => Box::new(c.model.embed_all(&split.train)?),
            LoadedModel::F64(c) => Box::new(c.model.embed_all(&split.train)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.meta().kind
    }

    pub fn params(&self) -> ParamCount {
        let m = self.meta();
        param_count(&m.layer_sizes, m.kind, m.n_users, m.n_items)
    }

    /// `cobrar[64-32]`: kind and branch widths.
    pub fn label(&self) -> String {
        format!("{}[{}]", self.kind(), join_sizes(&self.meta().layer_sizes))
    }

    /// Hidden layers only, e.g. `2048` or `512-512-256-256`.
    pub fn architecture(&self) -> String {
        let sizes = &self.meta().layer_sizes;
        match sizes.len() {
            0 | 1 => "none".to_string(),
            n => join_sizes(&sizes[..n - 1]),
        }
    }
}

fn check_fingerprint(path: &Path, model: &LoadedModel, split: &SplitDataset) -> Result<()> {
    let ours = split.fingerprint();
    let theirs = model.meta().fingerprint;
    if ours != theirs {
        bail!(
            "checkpoint {} was trained on different data\n  checkpoint: {theirs}\n  dataset:    {ours}",
            path.display()
        );
    }
    Ok(())
}

pub fn default_checkpoint(cfg: &ExperimentConfig) -> Result<PathBuf> {
    Ok(cfg.run_dir()?.join(CHECKPOINT_FILE))
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub report: EvalReport,
    pub aggregate: PathBuf,
    pub per_user: PathBuf,
}

/// Evaluates one checkpoint; writes `report_<phase>_k<k>.tsv` and
/// `per_user_<phase>_k<k>.csv` into `out_dir`.
pub fn evaluate_checkpoint(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
    phase: Phase,
    k: usize,
    out_dir: &Path,
) -> Result<EvaluateOutcome> {
    let split = load_prepared(cfg)?;
    let model = LoadedModel::load(checkpoint)?;
    check_fingerprint(checkpoint, &model, &split)?;
    let report = evaluate(model.scorer(&split)?.as_ref(), &split, phase, k)?;
    fs::create_dir_all(out_dir)?;
    let summary = ModelSummary::new(&model, &report);
    let aggregate = out_dir.join(format!("report_{phase}_k{k}.tsv"));
    fs::write(&aggregate, format!("{}{}", aggregate_header(), aggregate_row(&summary)))?;
    let per_user = out_dir.join(format!("per_user_{phase}_k{k}.csv"));
    fs::write(&per_user, report.per_user_csv())?;
    Ok(EvaluateOutcome {
        report,
        aggregate,
        per_user,
    })
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub table: String,
    pub path: PathBuf,
}

/// Evaluates every checkpoint on the same users and tests the best model on each
/// user-level metric against the rest.
pub fn compare(
    cfg: &ExperimentConfig,
    checkpoints: &[PathBuf],
    phase: Phase,
    k: usize,
    alpha: f64,
    out_dir: &Path,
) -> Result<CompareOutcome> {
    if checkpoints.len() < 2 {
        bail!("compare needs at least two checkpoints, got {}", checkpoints.len());
    }
    let split = load_prepared(cfg)?;
    let mut summaries = Vec::with_capacity(checkpoints.len());
    let mut ndcgs = Vec::new();
    let mut arps = Vec::new();
    for path in checkpoints {
        let model = LoadedModel::load(path)?;
        check_fingerprint(path, &model, &split)?;
        let report = evaluate(model.scorer(&split)?.as_ref(), &split, phase, k)?;
        ndcgs.push(report.ndcg_values());
        arps.push(report.arp_values());
        summaries.push(ModelSummary::new(&model, &report));
    }
    let ndcg_cmp = compare_user_metric(&ndcgs, Direction::HigherIsBetter, alpha)?;
    let arp_cmp = compare_user_metric(&arps, Direction::LowerIsBetter, alpha)?;
    let table = comparison_table(&summaries, &ndcg_cmp, &arp_cmp);
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("comparison_{phase}_k{k}.tsv"));
    fs::write(&path, &table)?;
    Ok(CompareOutcome { table, path })
}

pub const BOXPLOT_K: usize = 5;

/// Long-format per-user NDCG@5 for (DeepMF, CoBraR) pairs sharing an architecture.
pub fn boxplot_data(cfg: &ExperimentConfig, checkpoints: &[PathBuf], phase: Phase, out_dir: &Path) -> Result<PathBuf> {
    let split = load_prepared(cfg)?;
    let mut groups: Vec<(String, Option<PathBuf>, Option<PathBuf>)> = Vec::new();
    for path in checkpoints {
        let model = LoadedModel::load(path)?;
        check_fingerprint(path, &model, &split)?;
        let arch = model.architecture();
        let idx = match groups.iter().position(|g| g.0 == arch) {
            Some(i) => i,
            None => {
                groups.push((arch.clone(), None, None));
                groups.len() - 1
            }
        };
        let slot = match model.kind() {
            ModelKind::DeepMF => &mut groups[idx].1,
            ModelKind::CoBraR => &mut groups[idx].2,
        };
        if slot.replace(path.clone()).is_some() {
            bail!("architecture {arch} has more than one {} checkpoint", model.kind());
        }
    }
    let mut csv = String::from("architecture,model,user_index,ndcg_at_5\n");
    for (arch, deepmf, cobrar) in &groups {
        let (Some(deepmf), Some(cobrar)) = (deepmf, cobrar) else {
            bail!("architecture {arch} is unpaired: need one deepmf and one cobrar checkpoint");
        };
        for path in [deepmf, cobrar] {
            let model = LoadedModel::load(path)?;
            let report = evaluate(model.scorer(&split)?.as_ref(), &split, phase, BOXPLOT_K)?;
            for u in &report.users {
                csv.push_str(&format!("{arch},{},{},{}\n", model.kind(), u.user, u.ndcg));
            }
        }
    }
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("boxplot_{phase}.csv"));
    fs::write(&path, csv)?;
    Ok(path)
}

pub fn parse_phase(s: &str) -> Result<Phase> {
    s.parse().map_err(|e: String| anyhow!(e))
}
