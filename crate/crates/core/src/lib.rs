//! Neural collaborative filtering with a single shared encoder branch (CoBraR) or two
//! independent branches (DeepMF), trained from implicit feedback.
//!
//! ```no_run
//! use cobrar_core::dataset::{binarize_and_dedup, k_core_filter, parse_movielens, split_user_based, SplitRatios};
//! use cobrar_core::evaluation::{evaluate, Phase};
//! use cobrar_core::training::{fit, TrainConfig};
//! use cobrar_core::ModelKind;
//!
//! let raw = parse_movielens("ratings.dat".as_ref())?;
//! let ds = k_core_filter(&binarize_and_dedup(&raw)?, 5)?;
//! let split = split_user_based(&ds, SplitRatios::default(), 42)?;
//! let fitted = fit::<f64>(ModelKind::CoBraR, &split, &TrainConfig::default())?;
//! let report = evaluate(&fitted.model.embed_all(&split.train)?, &split, Phase::Test, 5)?;
//! println!("NDCG@5 {:.4}", report.mean_ndcg);
//! # Ok::<(), cobrar_core::Error>(())
//! ```

pub mod checkpoint;
pub mod dataset;
pub mod evaluation;
pub mod models;
pub mod nn;
pub mod scalar;
pub mod training;

use thiserror::Error;

pub use models::{param_count, CollabModel, ModelKind, ParamCount};
pub use scalar::Scalar;

pub type Model32 = models::CollabModel<f32>;
pub type Model64 = models::CollabModel<f64>;
pub type Branch32 = nn::Branch<f32>;
pub type Branch64 = nn::Branch<f64>;
pub type Layer32 = nn::LinearLayer<f32>;
pub type Layer64 = nn::LinearLayer<f64>;
pub type Embeddings32 = models::EmbeddingTable<f32>;
pub type Embeddings64 = models::EmbeddingTable<f64>;
pub type Checkpoint32 = checkpoint::Checkpoint<f32>;
pub type Checkpoint64 = checkpoint::Checkpoint<f64>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Nn(#[from] nn::NnError),
    #[error(transparent)]
    Model(#[from] models::ModelError),
    #[error(transparent)]
    Train(#[from] training::TrainError),
    #[error(transparent)]
    Eval(#[from] evaluation::EvalError),
    #[error(transparent)]
    Checkpoint(#[from] checkpoint::CheckpointError),
}
