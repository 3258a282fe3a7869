//! Top-k ranking and the accuracy / beyond-accuracy metrics.
//!
//! User-level metrics (NDCG@k, ARP) are averaged over users that have ground truth
//! in the evaluated phase. Catalog coverage and PopRSP are computed once over all
//! recommendation lists.

mod metrics;
mod report;
mod significance;

pub use metrics::{arp, coverage, ndcg_at_k, pop_rsp, GroupCounts, PopularityTable, HEAD_SHARE};
pub use report::{evaluate, mean_ndcg, EvalReport, Phase, UserMetrics};
pub use significance::{compare_user_metric, paired_t_test, Direction, MetricComparison, TTestResult};

use std::cmp::Ordering;

use thiserror::Error;

use crate::models::EmbeddingTable;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("user {user}: only {available} candidate items for a top-{k} list")]
    TooFewCandidates { user: usize, available: usize, k: usize },
    #[error("popularity group {0} has no candidate items")]
    EmptyGroup(&'static str),
    #[error("sample lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid evaluation input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Anything that can score the whole catalog for a user.
pub trait Scorer: Sync {
    fn n_items(&self) -> usize;
    /// Writes the score of every item into `out` (length `n_items`).
    fn score_items(&self, user: usize, out: &mut [f64]);
}

impl<T: Scalar> Scorer for EmbeddingTable<T> {
    fn n_items(&self) -> usize {
        self.items.len()
    }

    fn score_items(&self, user: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.score(user, i).as_f64();
        }
    }
}

/// A precomputed dense score matrix (users x items).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub n_items: usize,
    pub scores: Vec<f64>,
}

impl Scorer for ScoreMatrix {
    fn n_items(&self) -> usize {
        self.n_items
    }

    fn score_items(&self, user: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.scores[user * self.n_items..(user + 1) * self.n_items]);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    pub user: usize,
    pub items: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Descending score, ties broken by ascending item index; NaN ranks last.
#[inline]
fn rank_order(a: (usize, f64), b: (usize, f64)) -> Ordering {
    match (a.1.is_nan(), b.1.is_nan()) {
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal),
    }
    .then(a.0.cmp(&b.0))
}

/// Top-k items by score among those not in `exclude` (sorted ascending).
pub fn top_k(user: usize, scores: &[f64], k: usize, exclude: &[usize]) -> Result<RecommendationList> {
    let mut cand: Vec<(usize, f64)> = Vec::with_capacity(scores.len());
    let mut ex = exclude.iter().peekable();
    for (i, &s) in scores.iter().enumerate() {
        while ex.peek().is_some_and(|&&e| e < i) {
            ex.next();
        }
        if ex.peek() == Some(&&i) {
            continue;
        }
        cand.push((i, s));
    }
    if cand.len() < k {
        return Err(EvalError::TooFewCandidates {
            user,
            available: cand.len(),
            k,
        });
    }
    if k == 0 {
        return Ok(RecommendationList {
            user,
            items: Vec::new(),
            scores: Vec::new(),
        });
    }
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, |&a, &b| rank_order(a, b));
        cand.truncate(k);
    }
    cand.sort_unstable_by(|&a, &b| rank_order(a, b));
    Ok(RecommendationList {
        user,
        items: cand.iter().map(|c| c.0).collect(),
        scores: cand.iter().map(|c| c.1).collect(),
    })
}

/// Scores the catalog for `user` and returns the top-k list outside `exclude`.
pub fn recommend<S: Scorer + ?Sized>(scorer: &S, user: usize, k: usize, exclude: &[usize]) -> Result<RecommendationList> {
    let mut scores = vec![0.0; scorer.n_items()];
    scorer.score_items(user, &mut scores);
    top_k(user, &scores, k, exclude)
}

/// Sorted union of two sorted index lists.
pub(crate) fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}
