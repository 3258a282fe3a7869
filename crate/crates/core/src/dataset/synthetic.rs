//! Block-structured synthetic interaction data.
//!
//! Users and items are partitioned into `n_blocks` contiguous blocks. A user interacts
//! with an item of its own block with a probability that falls linearly from
//! `p_in_max` (first item of the block) to `p_in_min` (last item), and with an item of
//! another block with probability `p_out`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RawInteraction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub n_blocks: usize,
    pub p_in_max: f64,
    pub p_in_min: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl BlockSpec {
    /// The bundled desk-scale dataset: 200 users, 100 items, 4 blocks.
    pub fn bundled() -> Self {
        BlockSpec {
            n_users: 200,
            n_items: 100,
            n_blocks: 4,
            p_in_max: 0.95,
            p_in_min: 0.2,
            p_out: 0.01,
            seed: 2024,
        }
    }

    pub fn user_block(&self, u: usize) -> usize {
        u * self.n_blocks / self.n_users
    }

    pub fn item_block(&self, i: usize) -> usize {
        i * self.n_blocks / self.n_items
    }

    /// Interaction probability of the (user, item) cell.
    pub fn probability(&self, u: usize, i: usize) -> f64 {
        if self.user_block(u) != self.item_block(i) {
            return self.p_out;
        }
        let b = self.item_block(i);
        let first = (0..self.n_items).position(|j| self.item_block(j) == b).unwrap_or(0);
        let size = (0..self.n_items).filter(|&j| self.item_block(j) == b).count();
        if size <= 1 {
            return self.p_in_max;
        }
        let pos = (i - first) as f64 / (size - 1) as f64;
        self.p_in_max - (self.p_in_max - self.p_in_min) * pos
    }

    /// Samples the matrix cell by cell in (user, item) order. Tokens are `u<idx>` and
    /// `i<idx>`; ratings are 1.
    pub fn generate(&self) -> Vec<RawInteraction> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        for u in 0..self.n_users {
            for i in 0..self.n_items {
                if rng.gen::<f64>() < self.probability(u, i) {
                    out.push(RawInteraction {
                        user_id: format!("u{u}"),
                        item_id: format!("i{i}"),
                        rating: 1.0,
                        timestamp: Some(0),
                    });
                }
            }
        }
        out
    }
}

/// Parses the numeric suffix of a `u<idx>` / `i<idx>` token.
pub fn token_index(token: &str) -> Option<usize> {
    token.get(1..)?.parse().ok()
}
