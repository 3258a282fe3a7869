use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{arp, coverage, ndcg_at_k, pop_rsp, GroupCounts, PopularityTable};
use super::{merge_sorted, recommend, EvalError, RecommendationList, Result, Scorer};
use crate::dataset::SplitDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Val,
    Test,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Val => "val",
            Phase::Test => "test",
        })
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "val" | "validation" => Ok(Phase::Val),
            "test" => Ok(Phase::Test),
            other => Err(format!("unknown phase {other:?} (expected val|test)")),
        }
    }
}

impl Phase {
    fn ground_truth(self, split: &SplitDataset, u: usize) -> &[usize] {
        match self {
            Phase::Val => &split.val[u],
            Phase::Test => &split.test[u],
        }
    }

    /// Known interactions that may not be recommended: train, plus val at test time.
    pub fn exclusion(self, split: &SplitDataset, u: usize) -> Vec<usize> {
        match self {
            Phase::Val => split.train.user_items(u).to_vec(),
            Phase::Test => merge_sorted(split.train.user_items(u), &split.val[u]),
        }
    }

    /// Users with at least one held-out item in this phase.
    pub fn users(self, split: &SplitDataset) -> Vec<usize> {
        (0..split.n_users())
            .filter(|&u| !self.ground_truth(split, u).is_empty())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user: usize,
    pub ndcg: f64,
    pub arp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub phase: Phase,
    pub k: usize,
    pub users: Vec<UserMetrics>,
    pub mean_ndcg: f64,
    pub mean_arp: f64,
    /// Percentage in [0, 100].
    pub coverage: f64,
    /// `None` when the head or the tail group has no candidates.
    pub pop_rsp: Option<f64>,
    pub lists: Vec<RecommendationList>,
}

impl EvalReport {
    pub fn ndcg_values(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.ndcg).collect()
    }

    pub fn arp_values(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.arp).collect()
    }

    /// `user_index,ndcg_at_k,arp` rows.
    pub fn per_user_csv(&self) -> String {
        let mut out = String::from("user_index,ndcg_at_k,arp\n");
        for u in &self.users {
            out.push_str(&format!("{},{},{}\n", u.user, u.ndcg, u.arp));
        }
        out
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Evaluates every user with ground truth in `phase`. Per-user work runs in parallel;
/// results are folded in user order so the report is deterministic.
pub fn evaluate<S: Scorer + ?Sized>(scorer: &S, split: &SplitDataset, phase: Phase, k: usize) -> Result<EvalReport> {
    if scorer.n_items() != split.n_items() {
        return Err(EvalError::Invalid(format!(
            "scorer covers {} items, dataset has {}",
            scorer.n_items(),
            split.n_items()
        )));
    }
    let pop = PopularityTable::from_train(&split.train);
    let n_head = pop.n_head();
    let users = phase.users(split);
    let per_user: Vec<(RecommendationList, f64, GroupCounts)> = users
        .par_iter()
        .map(|&u| {
            let exclude = phase.exclusion(split, u);
            let list = recommend(scorer, u, k, &exclude)?;
            let ndcg = ndcg_at_k(&list.items, phase.ground_truth(split, u), k);
            let excluded_head = exclude.iter().filter(|&&i| pop.head[i]).count();
            let head = n_head - excluded_head;
            let tail = split.n_items() - exclude.len() - head;
            Ok((list, ndcg, GroupCounts { head, tail }))
        })
        .collect::<Result<_>>()?;

    let mut lists = Vec::with_capacity(per_user.len());
    let mut ndcgs = Vec::with_capacity(per_user.len());
    let mut groups = Vec::with_capacity(per_user.len());
    for (list, ndcg, g) in per_user {
        lists.push(list);
        ndcgs.push(ndcg);
        groups.push(g);
    }
    let arps = arp(&lists, &pop);
    let users: Vec<UserMetrics> = lists
        .iter()
        .zip(ndcgs.iter().zip(&arps))
        .map(|(l, (&ndcg, &arp))| UserMetrics { user: l.user, ndcg, arp })
        .collect();
    let pop_rsp = match pop_rsp(&lists, &pop, &groups) {
        Ok(v) => Some(v),
        Err(EvalError::EmptyGroup(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(EvalReport {
        phase,
        k,
        mean_ndcg: mean(users.iter().map(|u| u.ndcg)),
        mean_arp: mean(users.iter().map(|u| u.arp)),
        coverage: coverage(&lists, split.n_items()),
        pop_rsp,
        users,
        lists,
    })
}

/// Mean NDCG@k only; the per-epoch validation signal.
pub fn mean_ndcg<S: Scorer + ?Sized>(scorer: &S, split: &SplitDataset, phase: Phase, k: usize) -> Result<f64> {
    let users = phase.users(split);
    let ndcgs: Vec<f64> = users
        .par_iter()
        .map(|&u| {
            let list = recommend(scorer, u, k, &phase.exclusion(split, u))?;
            Ok(ndcg_at_k(&list.items, phase.ground_truth(split, u), k))
        })
        .collect::<Result<_>>()?;
    Ok(mean(ndcgs.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{split_user_based, InteractionDataset, SplitRatios};
    use crate::evaluation::ScoreMatrix;

    fn split() -> SplitDataset {
        let pairs = (0..6).flat_map(|u| (0..12).filter(move |i| (i + u) % 2 == 0).map(move |i| (u, i)));
        let ds = InteractionDataset::from_index_pairs(6, 12, pairs).unwrap();
        split_user_based(&ds, SplitRatios::default(), 5).unwrap()
    }

    #[test]
    fn oracle_scores_give_perfect_ndcg() {
        let s = split();
        let mut scores = vec![0.0; 6 * 12];
        for u in 0..6 {
            for &i in &s.test[u] {
                scores[u * 12 + i] = 1.0;
            }
        }
        let r = evaluate(&ScoreMatrix { n_items: 12, scores }, &s, Phase::Test, 5).unwrap();
        assert_eq!(r.mean_ndcg, 1.0);
        assert!(r.users.iter().all(|u| u.ndcg == 1.0));
    }

    #[test]
    fn constant_scores_pick_lowest_candidates() {
        let s = split();
        let r = evaluate(
            &ScoreMatrix {
                n_items: 12,
                scores: vec![0.25; 72],
            },
            &s,
            Phase::Test,
            2,
        )
        .unwrap();
        for l in &r.lists {
            let ex = Phase::Test.exclusion(&s, l.user);
            let expected: Vec<usize> = (0..12).filter(|i| !ex.contains(i)).take(2).collect();
            assert_eq!(l.items, expected);
        }
    }

    #[test]
    fn test_phase_excludes_train_and_val() {
        let s = split();
        let r = evaluate(
            &ScoreMatrix {
                n_items: 12,
                scores: (0..72).map(|x| ((x * 37) % 11) as f64).collect(),
            },
            &s,
            Phase::Test,
            3,
        )
        .unwrap();
        for l in &r.lists {
            for i in &l.items {
                assert!(!s.train.contains(l.user, *i));
                assert!(!s.val[l.user].contains(i));
            }
        }
    }

    #[test]
    fn per_user_csv_header() {
        let s = split();
        let r = evaluate(&ScoreMatrix { n_items: 12, scores: vec![0.0; 72] }, &s, Phase::Val, 1).unwrap();
        assert!(r.per_user_csv().starts_with("user_index,ndcg_at_k,arp\n"));
    }
}
