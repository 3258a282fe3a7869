//! Batch loss with negative sampling, the epoch loop with early stopping, and grid search.

use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{InteractionDataset, SplitDataset};
use crate::evaluation::{mean_ndcg, EvalError, Phase};
use crate::models::{param_count, CollabModel, EmbedTape, ModelError, ModelGrads, ModelKind};
use crate::nn::{adam_step, cosine, cosine_backward, AdamState, Mode, NnError};
use crate::scalar::{axpy, Scalar};

/// Cutoff of the validation metric that drives early stopping and model selection.
pub const VAL_K: usize = 5;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("user {user} has interacted with every item; no negatives to sample")]
    NoNegatives { user: usize },
    #[error("training diverged in epoch {epoch}: {detail}")]
    NonFinite {
        epoch: usize,
        detail: String,
        /// Epochs completed before the failure.
        log: Box<TrainLog>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_weight: f64,
    pub batch_size: usize,
    pub n_neg: usize,
    pub mu: f64,
    pub dropout_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub embedding_dim: usize,
    /// Hidden layer widths; the first one is also the down-projection width.
    pub architecture: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            l2_weight: 1e-3,
            batch_size: 256,
            n_neg: 5,
            mu: 1e-6,
            dropout_rate: 0.1,
            max_epochs: 100,
            patience: 10,
            embedding_dim: 128,
            architecture: vec![2048],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(TrainError::Config(msg));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.l2_weight.is_finite() && self.l2_weight >= 0.0) {
            return fail(format!("l2_weight must be non-negative, got {}", self.l2_weight));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.n_neg == 0 {
            return fail("n_neg must be at least 1".into());
        }
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return fail(format!("mu must lie in (0, 0.5), got {}", self.mu));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate must lie in [0, 1), got {}", self.dropout_rate));
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1".into());
        }
        if self.patience > self.max_epochs {
            return fail(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            ));
        }
        if self.embedding_dim == 0 || self.architecture.contains(&0) {
            return fail("layer widths must be positive".into());
        }
        Ok(())
    }

    /// `[d_1, ..., d_L]`: the hidden layers followed by the embedding dimension.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = self.architecture.clone();
        sizes.push(self.embedding_dim);
        sizes
    }
}

/// Draws `n_neg` items uniformly, with replacement, among the items the user has no
/// train interaction with.
pub fn sample_negatives<R: Rng + ?Sized>(
    train: &InteractionDataset,
    user: usize,
    n_neg: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let positives = train.user_items(user);
    let m = train.n_items();
    let n_free = m - positives.len();
    if n_free == 0 {
        return Err(TrainError::NoNegatives { user });
    }
    if positives.len() * 2 <= m {
        // rejection sampling accepts at least half of the draws
        let mut out = Vec::with_capacity(n_neg);
        while out.len() < n_neg {
            let j = rng.gen_range(0..m);
            if positives.binary_search(&j).is_err() {
                out.push(j);
            }
        }
        Ok(out)
    } else {
        let free: Vec<usize> = (0..m).filter(|j| positives.binary_search(j).is_err()).collect();
        Ok((0..n_neg).map(|_| free[rng.gen_range(0..n_free)]).collect())
    }
}

/// Clamped positive term `-ln clamp(y)` and its derivative in `y`.
pub fn positive_term<T: Scalar>(y: T, mu: T) -> (T, T) {
    let c = y.max(mu).min(T::one() - mu);
    let grad = if y < mu || y > T::one() - mu { T::zero() } else { -c.recip() };
    (-c.ln(), grad)
}

/// Clamped negative term `-ln(1 - clamp(y))` and its derivative in `y`.
pub fn negative_term<T: Scalar>(y: T, mu: T) -> (T, T) {
    let c = y.max(mu).min(T::one() - mu);
    let grad = if y < mu || y > T::one() - mu {
        T::zero()
    } else {
        (T::one() - c).recip()
    };
    (-(T::one() - c).ln(), grad)
}

/// Loss of one positive score and its negatives, every score clamped to `[mu, 1 - mu]`.
pub fn pair_loss<T: Scalar>(y_pos: T, y_negs: &[T], mu: T) -> T {
    y_negs
        .iter()
        .fold(positive_term(y_pos, mu).0, |acc, &y| acc + negative_term(y, mu).0)
}

/// Scores seen while computing one batch loss.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput<T> {
    pub loss: T,
    pub pos_scores: Vec<T>,
    pub neg_scores: Vec<Vec<T>>,
    pub negatives: Vec<Vec<usize>>,
}

/// Loss summed over the batch and its gradient, accumulated into `grads`.
///
/// Random draws happen in this order for every pair: user dropout, item dropout, the
/// `n_neg` negative items, then the dropout of each negative.
pub fn batch_loss<T: Scalar, R: Rng + ?Sized>(
    model: &CollabModel<T>,
    train: &InteractionDataset,
    batch: &[(usize, usize)],
    n_neg: usize,
    mu: f64,
    rng: &mut R,
    grads: &mut ModelGrads<T>,
) -> Result<BatchOutput<T>> {
    let mu = T::of(mu);
    let mut out = BatchOutput {
        loss: T::zero(),
        pos_scores: Vec::with_capacity(batch.len()),
        neg_scores: Vec::with_capacity(batch.len()),
        negatives: Vec::with_capacity(batch.len()),
    };
    let mut user_tape = EmbedTape::new();
    let mut item_tape = EmbedTape::new();
    let mut neg_tape = EmbedTape::new();
    for &(u, j) in batch {
        let e_u = model.user_embed(train, u, Mode::Train, rng, &mut user_tape)?;
        let e_j = model.item_embed(train, j, Mode::Train, rng, &mut item_tape)?;
        let y = cosine(&e_u, &e_j);
        let (l, dl) = positive_term(y, mu);
        out.loss += l;
        out.pos_scores.push(y);
        let (mut g_u, g_j) = cosine_backward(&e_u, &e_j, dl);
        model.embed_backward(train, &item_tape, &g_j, grads)?;

        let negs = sample_negatives(train, u, n_neg, rng)?;
        let mut ys = Vec::with_capacity(negs.len());
        for &k in &negs {
            let e_k = model.item_embed(train, k, Mode::Train, rng, &mut neg_tape)?;
            let y = cosine(&e_u, &e_k);
            let (l, dl) = negative_term(y, mu);
            out.loss += l;
            ys.push(y);
            let (gu, gk) = cosine_backward(&e_u, &e_k, dl);
            axpy(T::one(), &gu, &mut g_u);
            model.embed_backward(train, &neg_tape, &gk, grads)?;
        }
        model.embed_backward(train, &user_tape, &g_u, grads)?;
        out.neg_scores.push(ys);
        out.negatives.push(negs);
    }
    Ok(out)
}

/// Patience-based stopping on a metric where higher is better.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<f64>,
    best_epoch: usize,
    since_best: usize,
}

/// Outcome of [`EarlyStopping::observe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            best_epoch: 0,
            since_best: 0,
        }
    }

    /// Records the metric of `epoch`. Only a strictly greater value counts as an
    /// improvement; a non-improving epoch stops the run once `patience` epochs have
    /// passed since the best one.
    pub fn observe(&mut self, epoch: usize, value: f64) -> StopDecision {
        let improved = self.best.is_none_or(|b| value > b);
        if improved {
            self.best = Some(value);
            self.best_epoch = epoch;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        StopDecision {
            improved,
            stop: !improved && self.since_best >= self.patience,
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Loss summed over the epoch divided by the number of positive pairs.
    pub train_loss: f64,
    pub val_ndcg: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based; 0 while no epoch has finished.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainLog {
    pub fn best_val_ndcg(&self) -> Option<f64> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch).map(|e| e.val_ndcg)
    }

    /// `epoch train_loss val_ndcg_at_5 is_best`, tab separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tval_ndcg_at_5\tis_best\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.epoch,
                e.train_loss,
                e.val_ndcg,
                u8::from(e.epoch == self.best_epoch)
            ));
        }
        out
    }
}

/// A trained model at its best validation epoch.
#[derive(Debug, Clone)]
pub struct Fitted<T> {
    pub model: CollabModel<T>,
    pub log: TrainLog,
}

/// Trains a fresh model on `split.train`, keeping the parameters of the epoch with the
/// highest validation NDCG@5.
pub fn fit<T: Scalar>(kind: ModelKind, split: &SplitDataset, cfg: &TrainConfig) -> Result<Fitted<T>> {
    fit_with(kind, split, cfg, |_| {})
}

/// [`fit`] with a callback after every epoch.
pub fn fit_with<T: Scalar>(
    kind: ModelKind,
    split: &SplitDataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<Fitted<T>> {
    cfg.validate()?;
    let train = &split.train;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = CollabModel::<T>::new(
        kind,
        train.n_users(),
        train.n_items(),
        &cfg.layer_sizes(),
        cfg.dropout_rate,
        &mut rng,
    )?;
    let mut adam = AdamState::new(&model.parameter_sizes());
    let mut grads = model.zero_grads();
    let (lr, l2) = (T::of(cfg.learning_rate), T::of(cfg.l2_weight));

    let mut pairs: Vec<(usize, usize)> = train.pairs().collect();
    let mut log = TrainLog::default();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = model.clone();

    for epoch in 1..=cfg.max_epochs {
        pairs.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in pairs.chunks(cfg.batch_size) {
            grads.zero();
            let out = batch_loss(&model, train, batch, cfg.n_neg, cfg.mu, &mut rng, &mut grads)?;
            let loss = out.loss.as_f64();
            if !loss.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch,
                    detail: format!("batch loss is {loss}"),
                    log: Box::new(log),
                });
            }
            total += loss;
            let tensors = grads.tensors();
            if let Err(e) = adam_step(&mut model.parameters_mut(), &tensors, &mut adam, lr, l2) {
                return Err(match e {
                    NnError::NonFinite { .. } => TrainError::NonFinite {
                        epoch,
                        detail: e.to_string(),
                        log: Box::new(log),
                    },
                    other => other.into(),
                });
            }
        }
        let table = model.embed_all(train)?;
        let val_ndcg = mean_ndcg(&table, split, Phase::Val, VAL_K)?;
        let record = EpochRecord {
            epoch,
            train_loss: total / pairs.len().max(1) as f64,
            val_ndcg,
        };
        log.epochs.push(record);
        on_epoch(&record);
        let decision = stopper.observe(epoch, val_ndcg);
        if decision.improved {
            best = model.clone();
            log.best_epoch = epoch;
        }
        if decision.stop {
            log.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    Ok(Fitted { model: best, log })
}

/// Every hyperparameter as a list of candidate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigGrid {
    pub architecture: Vec<Vec<usize>>,
    pub embedding_dim: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub l2_weight: Vec<f64>,
    pub dropout_rate: Vec<f64>,
    pub batch_size: Vec<usize>,
    pub n_neg: Vec<usize>,
    pub mu: Vec<f64>,
    pub max_epochs: Vec<usize>,
    pub patience: Vec<usize>,
    pub seed: Vec<u64>,
}

impl ConfigGrid {
    pub fn singleton(cfg: &TrainConfig) -> Self {
        ConfigGrid {
            architecture: vec![cfg.architecture.clone()],
            embedding_dim: vec![cfg.embedding_dim],
            learning_rate: vec![cfg.learning_rate],
            l2_weight: vec![cfg.l2_weight],
            dropout_rate: vec![cfg.dropout_rate],
            batch_size: vec![cfg.batch_size],
            n_neg: vec![cfg.n_neg],
            mu: vec![cfg.mu],
            max_epochs: vec![cfg.max_epochs],
            patience: vec![cfg.patience],
            seed: vec![cfg.seed],
        }
    }

    /// The full search space. Dropout is only searched for CoBraR; DeepMF runs
    /// without it.
    pub fn reference_grid(kind: ModelKind) -> Self {
        ConfigGrid {
            architecture: vec![vec![2048], vec![1024], vec![512], vec![256], vec![512, 512, 256, 256]],
            embedding_dim: vec![64, 128],
            learning_rate: vec![1e-6, 1e-7],
            l2_weight: vec![1e-2, 1e-3],
            dropout_rate: match kind {
                ModelKind::CoBraR => vec![0.1, 0.5, 0.9],
                ModelKind::DeepMF => vec![0.0],
            },
            batch_size: vec![256],
            n_neg: vec![5],
            mu: vec![1e-6],
            max_epochs: vec![100],
            patience: vec![10],
            seed: vec![0],
        }
    }

    pub fn len(&self) -> usize {
        self.architecture.len()
            * self.embedding_dim.len()
            * self.learning_rate.len()
            * self.l2_weight.len()
            * self.dropout_rate.len()
            * self.batch_size.len()
            * self.n_neg.len()
            * self.mu.len()
            * self.max_epochs.len()
            * self.patience.len()
            * self.seed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All lattice points; the last field varies fastest.
    pub fn configs(&self) -> Vec<TrainConfig> {
        let mut out = Vec::with_capacity(self.len());
        for architecture in &self.architecture {
            for &embedding_dim in &self.embedding_dim {
                for &learning_rate in &self.learning_rate {
                    for &l2_weight in &self.l2_weight {
                        for &dropout_rate in &self.dropout_rate {
                            for &batch_size in &self.batch_size {
                                for &n_neg in &self.n_neg {
                                    for &mu in &self.mu {
                                        for &max_epochs in &self.max_epochs {
                                            for &patience in &self.patience {
                                                for &seed in &self.seed {
                                                    out.push(TrainConfig {
                                                        learning_rate,
                                                        l2_weight,
                                                        batch_size,
                                                        n_neg,
                                                        mu,
                                                        dropout_rate,
                                                        max_epochs,
                                                        patience,
                                                        embedding_dim,
                                                        architecture: architecture.clone(),
                                                        seed,
                                                    });
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One finished lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRun {
    pub index: usize,
    pub config: TrainConfig,
    pub log: TrainLog,
    /// Total parameters with biases neglected.
    pub params: u64,
}

impl GridRun {
    pub fn val_ndcg(&self) -> f64 {
        self.log.best_val_ndcg().unwrap_or(f64::NEG_INFINITY)
    }

    /// Higher validation NDCG@5, then fewer parameters, then earlier lattice position.
    fn beats(&self, other: &GridRun) -> bool {
        let (a, b) = (self.val_ndcg(), other.val_ndcg());
        if a != b {
            return a > b;
        }
        if self.params != other.params {
            return self.params < other.params;
        }
        self.index < other.index
    }
}

#[derive(Debug, Clone)]
pub struct GridOutcome<T> {
    pub best: usize,
    /// In lattice order.
    pub runs: Vec<GridRun>,
    pub model: CollabModel<T>,
}

impl<T> GridOutcome<T> {
    pub fn best_run(&self) -> &GridRun {
        &self.runs[self.best]
    }
}

/// Trains every lattice point, at most `jobs` at a time, and keeps the best model.
pub fn grid_search<T: Scalar>(
    split: &SplitDataset,
    kind: ModelKind,
    grid: &ConfigGrid,
    jobs: usize,
    on_run: impl Fn(&GridRun) + Sync,
) -> Result<GridOutcome<T>> {
    let configs = grid.configs();
    if configs.is_empty() {
        return Err(TrainError::Config("empty hyperparameter grid".into()));
    }
    for c in &configs {
        c.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| TrainError::Config(format!("cannot start worker pool: {e}")))?;
    let leader: Mutex<Option<(GridRun, CollabModel<T>)>> = Mutex::new(None);
    let runs: Vec<GridRun> = pool.install(|| {
        configs
            .into_par_iter()
            .enumerate()
            .map(|(index, config)| {
                let fitted = fit::<T>(kind, split, &config)?;
                let run = GridRun {
                    index,
                    params: param_count(&config.layer_sizes(), kind, split.n_users(), split.n_items()).total,
                    config,
                    log: fitted.log,
                };
                on_run(&run);
                let mut slot = leader.lock().expect("grid leader lock");
                if slot.as_ref().is_none_or(|(r, _)| run.beats(r)) {
                    *slot = Some((run.clone(), fitted.model));
                }
                Ok(run)
            })
            .collect::<Result<_>>()
    })?;
    let (best, model) = leader.into_inner().expect("grid leader lock").expect("non-empty grid");
    Ok(GridOutcome {
        best: best.index,
        runs,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds() -> InteractionDataset {
        InteractionDataset::from_index_pairs(2, 3, [(0, 0), (0, 1), (1, 0), (1, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn single_candidate_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_negatives(&ds(), 0, 5, &mut rng).unwrap(), vec![2; 5]);
        assert!(matches!(
            sample_negatives(&ds(), 1, 1, &mut rng),
            Err(TrainError::NoNegatives { user: 1 })
        ));
    }

    #[test]
    fn pair_loss_values() {
        let l = pair_loss(0.5f64, &[0.5], 1e-6);
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((l - 1.386294).abs() < 1e-6);
        let l = pair_loss(1.0f64, &[], 1e-6);
        assert!((l - 1e-6).abs() < 1e-9);
        let l = pair_loss(-1.0f64, &[], 1e-6);
        assert!((l - 13.8155).abs() < 1e-4);
    }

    #[test]
    fn clamp_gradient_is_zero_outside() {
        assert_eq!(positive_term(-0.3f64, 1e-6).1, 0.0);
        assert_eq!(positive_term(1.0f64, 1e-6).1, 0.0);
        assert_eq!(negative_term(-1.0f64, 1e-6).1, 0.0);
        assert_eq!(negative_term(1.0f64, 1e-6).1, 0.0);
        assert_eq!(positive_term(0.5f64, 1e-6).1, -2.0);
        assert_eq!(negative_term(0.5f64, 1e-6).1, 2.0);
    }

    #[test]
    fn early_stopping_patience_zero() {
        let mut s = EarlyStopping::new(0);
        assert!(!s.observe(1, 0.5).stop);
        assert!(!s.observe(2, 0.6).stop);
        let d = s.observe(3, 0.6);
        assert!(!d.improved && d.stop);
        assert_eq!(s.best_epoch(), 2);
    }

    #[test]
    fn early_stopping_decreasing_metric() {
        for patience in 1..5 {
            let mut s = EarlyStopping::new(patience);
            let mut stopped = None;
            for epoch in 1..=20 {
                if s.observe(epoch, 1.0 / epoch as f64).stop {
                    stopped = Some(epoch);
                    break;
                }
            }
            assert_eq!(s.best_epoch(), 1);
            assert_eq!(stopped, Some(1 + patience));
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { n_neg: 0, ..Default::default() },
            TrainConfig { mu: 0.5, ..Default::default() },
            TrainConfig { mu: 0.0, ..Default::default() },
            TrainConfig { patience: 101, ..Default::default() },
            TrainConfig { dropout_rate: 1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn reference_grid_sizes() {
        assert_eq!(ConfigGrid::reference_grid(ModelKind::CoBraR).len(), 120);
        assert_eq!(ConfigGrid::reference_grid(ModelKind::CoBraR).configs().len(), 120);
        assert_eq!(ConfigGrid::reference_grid(ModelKind::DeepMF).len(), 40);
    }

    fn run(index: usize, val: f64, params: u64) -> GridRun {
        GridRun {
            index,
            config: TrainConfig::default(),
            log: TrainLog {
                epochs: vec![EpochRecord { epoch: 1, train_loss: 1.0, val_ndcg: val }],
                best_epoch: 1,
                stopped_early: false,
            },
            params,
        }
    }

    #[test]
    fn grid_tie_breaks() {
        assert!(run(5, 0.4, 900).beats(&run(0, 0.3, 10)));
        assert!(run(5, 0.3, 10).beats(&run(0, 0.3, 11)));
        assert!(run(0, 0.3, 10).beats(&run(5, 0.3, 10)));
        assert!(!run(5, 0.3, 10).beats(&run(0, 0.3, 10)));
        let empty = GridRun { log: TrainLog::default(), ..run(0, 0.0, 1) };
        assert!(run(9, 0.0, 1000).beats(&empty));
    }

    #[test]
    fn tsv_header() {
        let log = TrainLog {
            epochs: vec![EpochRecord { epoch: 1, train_loss: 2.5, val_ndcg: 0.25 }],
            best_epoch: 1,
            stopped_early: false,
        };
        assert_eq!(log.to_tsv(), "epoch\ttrain_loss\tval_ndcg_at_5\tis_best\n1\t2.5\t0.25\t1\n");
    }
}
