//! User-based random splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, DatasetFingerprint, InteractionDataset, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.7,
            val: 0.1,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !(0.0..=1.0).contains(r)) || (all.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(DatasetError::Invalid(format!(
                "split ratios must be in [0, 1] and sum to 1, got {all:?}"
            )));
        }
        Ok(())
    }

    /// (n_val, n_test) for a user with `n` interactions; the remainder trains.
    pub fn counts(&self, n: usize) -> (usize, usize) {
        // the epsilon absorbs representation error such as 0.1 * 30 = 3.0000000000000004
        // or products landing a hair below an integer
        let take = |r: f64| ((r * n as f64) + 1e-9).floor() as usize;
        let n_test = take(self.test);
        let n_val = take(self.val).min(n - n_test);
        (n_val, n_test)
    }
}

/// Train matrix plus per-user held-out item lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: InteractionDataset,
    pub val: Vec<Vec<usize>>,
    pub test: Vec<Vec<usize>>,
    pub ratios: SplitRatios,
    pub seed: u64,
}

impl SplitDataset {
    pub fn n_users(&self) -> usize {
        self.train.n_users()
    }

    pub fn n_items(&self) -> usize {
        self.train.n_items()
    }

    pub fn n_interactions(&self) -> usize {
        self.train.n_interactions()
            + self.val.iter().map(Vec::len).sum::<usize>()
            + self.test.iter().map(Vec::len).sum::<usize>()
    }

    pub fn fingerprint(&self) -> DatasetFingerprint {
        DatasetFingerprint {
            n_users: self.n_users(),
            n_items: self.n_items(),
            n_interactions: self.n_interactions(),
            split_seed: self.seed,
        }
    }

    /// The full (pre-split) interaction set of user `u`, sorted.
    pub fn user_all(&self, u: usize) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .train
            .user_items(u)
            .iter()
            .chain(&self.val[u])
            .chain(&self.test[u])
            .copied()
            .collect();
        all.sort_unstable();
        all
    }
}

/// Deterministic generator for user `u`: one ChaCha stream per user under the global seed.
pub fn user_rng(seed: u64, user: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(user as u64);
    rng
}

/// Shuffles each user's interactions and cuts them into test, val and train (in that
/// order). Val and test sizes are floored; the remainder goes to train.
pub fn split_user_based(ds: &InteractionDataset, ratios: SplitRatios, seed: u64) -> Result<SplitDataset> {
    ratios.validate()?;
    let n_users = ds.n_users();
    let mut val = Vec::with_capacity(n_users);
    let mut test = Vec::with_capacity(n_users);
    let mut train_pairs = Vec::with_capacity(ds.n_interactions());
    for u in 0..n_users {
        let mut items = ds.user_items(u).to_vec();
        if items.is_empty() {
            return Err(DatasetError::Invalid(format!("user {u} has no interactions")));
        }
        items.shuffle(&mut user_rng(seed, u));
        let (n_val, n_test) = ratios.counts(items.len());
        let mut t = items[..n_test].to_vec();
        let mut v = items[n_test..n_test + n_val].to_vec();
        t.sort_unstable();
        v.sort_unstable();
        train_pairs.extend(items[n_test + n_val..].iter().map(|&i| (u, i)));
        test.push(t);
        val.push(v);
    }
    let train = InteractionDataset::from_pairs(ds.user_ids().to_vec(), ds.item_ids().to_vec(), train_pairs)?;
    Ok(SplitDataset {
        train,
        val,
        test,
        ratios,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_user(n: usize) -> InteractionDataset {
        InteractionDataset::from_index_pairs(1, n, (0..n).map(|i| (0, i))).unwrap()
    }

    #[test]
    fn ten_interactions() {
        let s = split_user_based(&one_user(10), SplitRatios::default(), 1).unwrap();
        assert_eq!(s.train.user_items(0).len(), 7);
        assert_eq!(s.val[0].len(), 1);
        assert_eq!(s.test[0].len(), 2);
    }

    #[test]
    fn five_interactions_floor_rule() {
        let s = split_user_based(&one_user(5), SplitRatios::default(), 1).unwrap();
        assert_eq!(s.train.user_items(0).len(), 4);
        assert_eq!(s.val[0].len(), 0);
        assert_eq!(s.test[0].len(), 1);
    }

    #[test]
    fn counts_are_exact_on_round_products() {
        let r = SplitRatios::default();
        for n in 1..500 {
            let (v, t) = r.counts(n);
            assert_eq!(t, (2 * n) / 10, "n={n}");
            assert_eq!(v, n / 10, "n={n}");
        }
    }

    #[test]
    fn deterministic() {
        let ds = InteractionDataset::from_index_pairs(
            3,
            20,
            (0..3).flat_map(|u| (0..20).filter(move |i| (i + u) % 2 == 0).map(move |i| (u, i))),
        )
        .unwrap();
        let a = split_user_based(&ds, SplitRatios::default(), 9).unwrap();
        let b = split_user_based(&ds, SplitRatios::default(), 9).unwrap();
        assert_eq!(a, b);
        let c = split_user_based(&ds, SplitRatios::default(), 10).unwrap();
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn bad_ratios() {
        let r = SplitRatios {
            train: 0.5,
            val: 0.1,
            test: 0.2,
        };
        assert!(split_user_based(&one_user(3), r, 0).is_err());
    }
}
