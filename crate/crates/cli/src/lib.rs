//! Command-line orchestration: dataset preparation, training, evaluation, model
//! comparison and plot data.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod report;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "cobrar", version, about = "Train and evaluate single- and two-branch collaborative filtering models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// val or test.
    #[arg(long, default_value = "test")]
    pub phase: String,
    /// List length; defaults to the config's eval.k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, binarize, k-core filter and split the dataset into the cache.
    Prepare {
        #[command(flatten)]
        common: Common,
        /// Overrides dataset.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the configured model or grid on the prepared cache.
    Train {
        #[command(flatten)]
        common: Common,
        /// Overrides the training seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Lattice points trained concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate a checkpoint (the config's run by default).
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Compare two or more checkpoints with paired t-tests.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long = "checkpoint", required = true, num_args = 1..)]
        checkpoints: Vec<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
        /// Family-wise significance level before Bonferroni correction.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Per-user NDCG@5 of (deepmf, cobrar) checkpoint pairs, one pair per architecture.
    BoxplotData {
        #[command(flatten)]
        common: Common,
        #[arg(long = "checkpoint", required = true, num_args = 1..)]
        checkpoints: Vec<PathBuf>,
        #[arg(long, default_value = "test")]
        phase: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.apply_env_override();
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command, printing its results to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare { common, seed } => {
            let mut cfg = load(&common)?;
            if let Some(s) = seed {
                cfg.dataset.seed = s;
            }
            let out = commands::prepare(&cfg)?;
            let (u, i, n) = out.stats.filtered;
            println!("{u} {i} {n}");
            eprintln!(
                "raw {} {} {}; cache {}",
                out.stats.raw.0,
                out.stats.raw.1,
                out.stats.raw.2,
                out.cache_dir.display()
            );
        }
        Command::Train { common, seed, jobs } => {
            let mut cfg = load(&common)?;
            if let Some(s) = seed {
                cfg.override_train_seed(s);
            }
            let out = commands::train(&cfg, jobs)?;
            print!("{}", out.log.to_tsv());
            eprintln!("checkpoint {}", out.checkpoint.display());
        }
        Command::Evaluate {
            common,
            checkpoint,
            eval,
        } => {
            let cfg = load(&common)?;
            let checkpoint = match checkpoint {
                Some(c) => c,
                None => commands::default_checkpoint(&cfg)?,
            };
            let out_dir = match eval.out {
                Some(o) => o,
                None => checkpoint.parent().map(PathBuf::from).unwrap_or_default(),
            };
            let phase = commands::parse_phase(&eval.phase)?;
            let out = commands::evaluate_checkpoint(&cfg, &checkpoint, phase, eval.k.unwrap_or(cfg.eval.k), &out_dir)?;
            print!("{}", std::fs::read_to_string(&out.aggregate)?);
        }
        Command::Compare {
            common,
            checkpoints,
            eval,
            alpha,
        } => {
            let cfg = load(&common)?;
            let out_dir = eval.out.unwrap_or_else(|| cfg.output_root().join("compare"));
            let phase = commands::parse_phase(&eval.phase)?;
            let out = commands::compare(&cfg, &checkpoints, phase, eval.k.unwrap_or(cfg.eval.k), alpha, &out_dir)?;
            print!("{}", out.table);
        }
        Command::BoxplotData {
            common,
            checkpoints,
            phase,
            out,
        } => {
            let cfg = load(&common)?;
            let out_dir = out.unwrap_or_else(|| cfg.output_root().join("boxplot"));
            let path = commands::boxplot_data(&cfg, &checkpoints, commands::parse_phase(&phase)?, &out_dir)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
