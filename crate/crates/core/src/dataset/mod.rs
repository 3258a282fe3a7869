//! Implicit-feedback interaction data.
//!
//! Raw rating logs are parsed ([`parse`]), binarized into an [`InteractionDataset`],
//! k-core filtered, and split per user into train/validation/test ([`split`]).
//! The dataset stores the binary matrix twice, row-compressed (user profiles) and
//! column-compressed (item profiles), so both directions are O(1) slices.

pub mod cache;
pub mod parse;
pub mod split;
pub mod synthetic;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_amazon, parse_movielens, RawInteraction};
pub use split::{split_user_based, SplitDataset, SplitRatios};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("no interactions in input")]
    Empty,
    #[error("k-core eliminated all data")]
    KCoreEmpty,
    #[error("{kind} index {index} out of range (len {len})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Compressed sparse binary rows: `indices[indptr[r]..indptr[r + 1]]` are the sorted
/// column indices of row `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Compressed {
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

impl Compressed {
    /// `pairs` must be sorted by (row, col) and free of duplicates.
    fn from_sorted(n_rows: usize, pairs: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::new();
        for (r, c) in pairs {
            indptr[r + 1] += 1;
            indices.push(c);
        }
        for r in 0..n_rows {
            indptr[r + 1] += indptr[r];
        }
        Compressed { indptr, indices }
    }

    #[inline]
    fn row(&self, r: usize) -> &[usize] {
        &self.indices[self.indptr[r]..self.indptr[r + 1]]
    }

    fn transpose(&self, n_cols: usize) -> Self {
        let n_rows = self.indptr.len() - 1;
        let mut counts = vec![0usize; n_cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..n_cols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut fill = counts;
        let mut indices = vec![0usize; self.indices.len()];
        // rows are visited in ascending order, so every transposed row comes out sorted
        for r in 0..n_rows {
            for &c in self.row(r) {
                indices[fill[c]] = r;
                fill[c] += 1;
            }
        }
        Compressed { indptr, indices }
    }
}

/// A sparse binary indicator vector: the positions of its ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Profile<'a> {
    pub dim: usize,
    pub indices: &'a [usize],
}

impl<'a> Profile<'a> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn to_dense<T: num_traits::Float>(&self) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim];
        for &i in self.indices {
            v[i] = T::one();
        }
        v
    }
}

/// Binary user-item interaction matrix with token <-> index maps.
#[derive(Debug, Clone)]
pub struct InteractionDataset {
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_lookup: HashMap<String, usize>,
    item_lookup: HashMap<String, usize>,
    rows: Compressed,
    cols: Compressed,
}

impl PartialEq for InteractionDataset {
    fn eq(&self, other: &Self) -> bool {
        self.user_ids == other.user_ids
            && self.item_ids == other.item_ids
            && self.rows == other.rows
    }
}

impl InteractionDataset {
    /// Builds a dataset from dense index pairs. Duplicate pairs collapse into one.
    ///
    /// Users or items without interactions are allowed here (a train matrix can leave
    /// an item with no train interactions); ingestion and k-core filtering guarantee
    /// non-empty profiles on their own outputs.
    pub fn from_pairs(
        user_ids: Vec<String>,
        item_ids: Vec<String>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n_users = user_ids.len();
        let n_items = item_ids.len();
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
        for &(u, i) in &pairs {
            if u >= n_users {
                return Err(DatasetError::IndexOutOfRange {
                    kind: "user",
                    index: u,
                    len: n_users,
                });
            }
            if i >= n_items {
                return Err(DatasetError::IndexOutOfRange {
                    kind: "item",
                    index: i,
                    len: n_items,
                });
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let user_lookup = build_lookup(&user_ids, "user")?;
        let item_lookup = build_lookup(&item_ids, "item")?;
        let rows = Compressed::from_sorted(n_users, pairs.into_iter());
        let cols = rows.transpose(n_items);
        Ok(InteractionDataset {
            user_ids,
            item_ids,
            user_lookup,
            item_lookup,
            rows,
            cols,
        })
    }

    /// Dataset whose tokens are the decimal indices themselves.
    pub fn from_index_pairs(
        n_users: usize,
        n_items: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        Self::from_pairs(
            (0..n_users).map(|u| u.to_string()).collect(),
            (0..n_items).map(|i| i.to_string()).collect(),
            pairs,
        )
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_interactions(&self) -> usize {
        self.rows.indices.len()
    }

    /// Sorted item indices of user `u`. Panics if `u` is out of range.
    #[inline]
    pub fn user_items(&self, u: usize) -> &[usize] {
        self.rows.row(u)
    }

    /// Sorted user indices of item `i`. Panics if `i` is out of range.
    #[inline]
    pub fn item_users(&self, i: usize) -> &[usize] {
        self.cols.row(i)
    }

    pub fn contains(&self, u: usize, i: usize) -> bool {
        u < self.n_users() && self.user_items(u).binary_search(&i).is_ok()
    }

    /// Row `u` of the interaction matrix as a sparse vector of length M.
    pub fn user_profile(&self, u: usize) -> Result<Profile<'_>> {
        if u >= self.n_users() {
            return Err(DatasetError::IndexOutOfRange {
                kind: "user",
                index: u,
                len: self.n_users(),
            });
        }
        Ok(Profile {
            dim: self.n_items(),
            indices: self.user_items(u),
        })
    }

    /// Column `i` of the interaction matrix as a sparse vector of length N.
    pub fn item_profile(&self, i: usize) -> Result<Profile<'_>> {
        if i >= self.n_items() {
            return Err(DatasetError::IndexOutOfRange {
                kind: "item",
                index: i,
                len: self.n_items(),
            });
        }
        Ok(Profile {
            dim: self.n_users(),
            indices: self.item_users(i),
        })
    }

    /// All interactions in (user, item) order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_users()).flat_map(move |u| self.user_items(u).iter().map(move |&i| (u, i)))
    }

    pub fn user_id(&self, u: usize) -> &str {
        &self.user_ids[u]
    }

    pub fn item_id(&self, i: usize) -> &str {
        &self.item_ids[i]
    }

    pub fn user_index(&self, token: &str) -> Option<usize> {
        self.user_lookup.get(token).copied()
    }

    pub fn item_index(&self, token: &str) -> Option<usize> {
        self.item_lookup.get(token).copied()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    /// Per-item interaction counts.
    pub fn item_degrees(&self) -> Vec<usize> {
        (0..self.n_items()).map(|i| self.item_users(i).len()).collect()
    }
}

fn build_lookup(ids: &[String], kind: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (idx, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), idx).is_some() {
            return Err(DatasetError::Invalid(format!("duplicate {kind} token {id:?}")));
        }
    }
    Ok(map)
}

/// Collapses raw rating records into a binary dataset. Any rating counts as a
/// positive interaction; dense indices follow first appearance of each token.
pub fn binarize_and_dedup(raw: &[RawInteraction]) -> Result<InteractionDataset> {
    if raw.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut users: HashMap<&str, usize> = HashMap::new();
    let mut items: HashMap<&str, usize> = HashMap::new();
    let mut pairs = Vec::with_capacity(raw.len());
    for r in raw {
        let u = *users.entry(r.user_id.as_str()).or_insert_with(|| {
            user_ids.push(r.user_id.clone());
            user_ids.len() - 1
        });
        let i = *items.entry(r.item_id.as_str()).or_insert_with(|| {
            item_ids.push(r.item_id.clone());
            item_ids.len() - 1
        });
        pairs.push((u, i));
    }
    InteractionDataset::from_pairs(user_ids, item_ids, pairs)
}

/// Iteratively drops users and items with fewer than `k` interactions until every
/// remaining user and item has at least `k`. Surviving indices keep their relative order.
pub fn k_core_filter(ds: &InteractionDataset, k: usize) -> Result<InteractionDataset> {
    if k == 0 {
        return Err(DatasetError::Invalid("k-core requires k >= 1".into()));
    }
    let n_users = ds.n_users();
    let n_items = ds.n_items();
    let mut user_alive = vec![true; n_users];
    let mut item_alive = vec![true; n_items];
    let mut user_deg: Vec<usize> = (0..n_users).map(|u| ds.user_items(u).len()).collect();
    let mut item_deg = ds.item_degrees();

    loop {
        let dead_users: Vec<usize> = (0..n_users)
            .filter(|&u| user_alive[u] && user_deg[u] < k)
            .collect();
        let dead_items: Vec<usize> = (0..n_items)
            .filter(|&i| item_alive[i] && item_deg[i] < k)
            .collect();
        if dead_users.is_empty() && dead_items.is_empty() {
            break;
        }
        for &u in &dead_users {
            user_alive[u] = false;
        }
        for &i in &dead_items {
            item_alive[i] = false;
        }
        // withdraw every edge that touches a newly removed node exactly once
        for &u in &dead_users {
            for &i in ds.user_items(u) {
                if item_alive[i] {
                    item_deg[i] -= 1;
                }
            }
        }
        for &i in &dead_items {
            for &u in ds.item_users(i) {
                if user_alive[u] {
                    user_deg[u] -= 1;
                }
            }
        }
    }

    let user_map = densify(&user_alive);
    let item_map = densify(&item_alive);
    let user_ids: Vec<String> = (0..n_users)
        .filter(|&u| user_alive[u])
        .map(|u| ds.user_ids[u].clone())
        .collect();
    let item_ids: Vec<String> = (0..n_items)
        .filter(|&i| item_alive[i])
        .map(|i| ds.item_ids[i].clone())
        .collect();
    if user_ids.is_empty() || item_ids.is_empty() {
        return Err(DatasetError::KCoreEmpty);
    }
    let pairs = ds
        .pairs()
        .filter(|&(u, i)| user_alive[u] && item_alive[i])
        .map(|(u, i)| (user_map[u], item_map[i]));
    InteractionDataset::from_pairs(user_ids, item_ids, pairs)
}

fn densify(alive: &[bool]) -> Vec<usize> {
    let mut next = 0;
    alive
        .iter()
        .map(|&a| {
            let idx = next;
            if a {
                next += 1;
            }
            idx
        })
        .collect()
}

/// Identifies the preprocessed data a model was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub n_users: usize,
    pub n_items: usize,
    pub n_interactions: usize,
    pub split_seed: u64,
}

impl fmt::Display for DatasetFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "users={} items={} interactions={} split_seed={}",
            self.n_users, self.n_items, self.n_interactions, self.split_seed
        )
    }
}
