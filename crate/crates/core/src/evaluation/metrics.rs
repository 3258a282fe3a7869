use std::collections::HashSet;

use super::{EvalError, RecommendationList, Result};
use crate::dataset::InteractionDataset;

/// Cumulative share of train interactions covered by the short head, as a fraction.
pub const HEAD_SHARE: (usize, usize) = (4, 5);

/// Binary-relevance NDCG of the first `k` entries of `items`. `relevant` must be
/// sorted; an empty relevant set scores 0.
pub fn ndcg_at_k(items: &[usize], relevant: &[usize], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let discount = |pos: usize| 1.0 / ((pos + 2) as f64).log2();
    let dcg: f64 = items
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, it)| relevant.binary_search(it).is_ok())
        .map(|(pos, _)| discount(pos))
        .fold(0.0, |a, b| a + b);
    let idcg: f64 = (0..k.min(relevant.len())).map(discount).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Train popularity per item and the short-head / long-tail partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityTable {
    pub counts: Vec<usize>,
    pub head: Vec<bool>,
}

impl PopularityTable {
    /// Head = the shortest prefix of items in descending-popularity order (ties by
    /// ascending index) whose cumulative share of interactions reaches [`HEAD_SHARE`].
    pub fn from_counts(counts: Vec<usize>) -> Self {
        let total: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        let mut head = vec![false; counts.len()];
        let mut cum = 0usize;
        if total > 0 {
            for &i in &order {
                if cum * HEAD_SHARE.1 >= total * HEAD_SHARE.0 {
                    break;
                }
                head[i] = true;
                cum += counts[i];
            }
        }
        PopularityTable { counts, head }
    }

    pub fn from_train(train: &InteractionDataset) -> Self {
        Self::from_counts(train.item_degrees())
    }

    pub fn n_head(&self) -> usize {
        self.head.iter().filter(|&&h| h).count()
    }

    pub fn n_tail(&self) -> usize {
        self.head.len() - self.n_head()
    }
}

/// Mean train popularity of each list's items.
pub fn arp(recs: &[RecommendationList], pop: &PopularityTable) -> Vec<f64> {
    recs.iter()
        .map(|r| {
            if r.items.is_empty() {
                0.0
            } else {
                r.items.iter().map(|&i| pop.counts[i] as f64).sum::<f64>() / r.items.len() as f64
            }
        })
        .collect()
}

/// Percentage of the catalog appearing in at least one list.
pub fn coverage(recs: &[RecommendationList], n_items: usize) -> f64 {
    if n_items == 0 {
        return 0.0;
    }
    let distinct: HashSet<usize> = recs.iter().flat_map(|r| r.items.iter().copied()).collect();
    distinct.len() as f64 / n_items as f64 * 100.0
}

/// Number of head and tail items among a user's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GroupCounts {
    pub head: usize,
    pub tail: usize,
}

/// Ranking-based statistical parity between head and tail items.
///
/// `P_g = (sum over users of group-g items in the top-k) / (sum over users of group-g
/// candidates)`, and the result is the population standard deviation of
/// `{P_head, P_tail}` divided by their mean.
pub fn pop_rsp(recs: &[RecommendationList], pop: &PopularityTable, candidates: &[GroupCounts]) -> Result<f64> {
    if recs.len() != candidates.len() {
        return Err(EvalError::LengthMismatch(recs.len(), candidates.len()));
    }
    let (mut rec_head, mut rec_tail) = (0usize, 0usize);
    for r in recs {
        for &i in &r.items {
            if pop.head[i] {
                rec_head += 1;
            } else {
                rec_tail += 1;
            }
        }
    }
    let cand_head: usize = candidates.iter().map(|c| c.head).sum();
    let cand_tail: usize = candidates.iter().map(|c| c.tail).sum();
    if cand_head == 0 {
        return Err(EvalError::EmptyGroup("head"));
    }
    if cand_tail == 0 {
        return Err(EvalError::EmptyGroup("tail"));
    }
    let p = [rec_head as f64 / cand_head as f64, rec_tail as f64 / cand_tail as f64];
    let mean = (p[0] + p[1]) / 2.0;
    if mean == 0.0 {
        return Ok(0.0);
    }
    let var = ((p[0] - mean).powi(2) + (p[1] - mean).powi(2)) / 2.0;
    Ok(var.sqrt() / mean)
}
