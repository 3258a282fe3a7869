//! On-disk cache of a preprocessed, split dataset.
//!
//! `interactions.txt`:
//! ```text
//! n_users n_items n_interactions
//! user_index item_index
//! ...
//! ```
//! `split.txt` lists the same interactions in the same order with their partition:
//! ```text
//! seed <seed> ratios <train> <val> <test>
//! user_index item_index train|val|test
//! ...
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::split::{SplitDataset, SplitRatios};
use super::{DatasetError, InteractionDataset, Result};

pub const INTERACTIONS_FILE: &str = "interactions.txt";
pub const SPLIT_FILE: &str = "split.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl Partition {
    fn tag(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Val => "val",
            Partition::Test => "test",
        }
    }

    fn from_tag(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Partition::Train),
            "val" => Some(Partition::Val),
            "test" => Some(Partition::Test),
            _ => None,
        }
    }
}

/// Every interaction with its partition, sorted by (user, item).
pub fn tagged_interactions(split: &SplitDataset) -> Vec<(usize, usize, Partition)> {
    let mut out = Vec::with_capacity(split.n_interactions());
    for u in 0..split.n_users() {
        let mut row: Vec<(usize, Partition)> = split
            .train
            .user_items(u)
            .iter()
            .map(|&i| (i, Partition::Train))
            .chain(split.val[u].iter().map(|&i| (i, Partition::Val)))
            .chain(split.test[u].iter().map(|&i| (i, Partition::Test)))
            .collect();
        row.sort_unstable_by_key(|&(i, _)| i);
        out.extend(row.into_iter().map(|(i, p)| (u, i, p)));
    }
    out
}

pub fn write_interactions<W: Write>(mut w: W, split: &SplitDataset) -> std::io::Result<()> {
    let tagged = tagged_interactions(split);
    writeln!(w, "{} {} {}", split.n_users(), split.n_items(), tagged.len())?;
    for (u, i, _) in &tagged {
        writeln!(w, "{u} {i}")?;
    }
    w.flush()
}

pub fn write_split<W: Write>(mut w: W, split: &SplitDataset) -> std::io::Result<()> {
    let r = split.ratios;
    writeln!(w, "seed {} ratios {} {} {}", split.seed, r.train, r.val, r.test)?;
    for (u, i, p) in tagged_interactions(split) {
        writeln!(w, "{u} {i} {}", p.tag())?;
    }
    w.flush()
}

/// Writes both cache files into `dir`, creating it if needed.
pub fn write_cache(dir: &Path, split: &SplitDataset) -> Result<(PathBuf, PathBuf)> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let inter = dir.join(INTERACTIONS_FILE);
    let sidecar = dir.join(SPLIT_FILE);
    let f = File::create(&inter).map_err(io_err(&inter))?;
    write_interactions(BufWriter::new(f), split).map_err(io_err(&inter))?;
    let f = File::create(&sidecar).map_err(io_err(&sidecar))?;
    write_split(BufWriter::new(f), split).map_err(io_err(&sidecar))?;
    Ok((inter, sidecar))
}

pub fn cache_exists(dir: &Path) -> bool {
    dir.join(INTERACTIONS_FILE).is_file() && dir.join(SPLIT_FILE).is_file()
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| DatasetError::Parse {
        line,
        reason: format!("expected {what}"),
    })
}

fn lines(path: &Path) -> Result<impl Iterator<Item = (usize, Result<String>)>> {
    let f = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufReader::new(f).lines().enumerate().map(|(n, l)| {
        (
            n + 1,
            l.map_err(|e| DatasetError::Parse {
                line: n + 1,
                reason: e.to_string(),
            }),
        )
    }))
}

/// Loads a cache written by [`write_cache`], checking that both files agree.
pub fn read_cache(dir: &Path) -> Result<SplitDataset> {
    let mut inter = lines(&dir.join(INTERACTIONS_FILE))?;
    let (_, header) = inter.next().ok_or(DatasetError::Empty)?;
    let header = header?;
    let mut h = header.split_whitespace();
    let n_users = parse_usize(h.next(), 1, "n_users")?;
    let n_items = parse_usize(h.next(), 1, "n_items")?;
    let n_inter = parse_usize(h.next(), 1, "n_interactions")?;
    let mut pairs = Vec::with_capacity(n_inter);
    for (n, line) in inter {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut t = line.split_whitespace();
        let u = parse_usize(t.next(), n, "user_index")?;
        let i = parse_usize(t.next(), n, "item_index")?;
        pairs.push((u, i));
    }
    if pairs.len() != n_inter {
        return Err(DatasetError::Invalid(format!(
            "header announces {n_inter} interactions, file has {}",
            pairs.len()
        )));
    }

    let mut side = lines(&dir.join(SPLIT_FILE))?;
    let (_, header) = side.next().ok_or(DatasetError::Empty)?;
    let header = header?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (seed, ratios) = match h.as_slice() {
        ["seed", s, "ratios", a, b, c] => {
            let p = |x: &str| {
                x.parse::<f64>().map_err(|_| DatasetError::Parse {
                    line: 1,
                    reason: format!("bad ratio {x:?}"),
                })
            };
            let seed = s.parse::<u64>().map_err(|_| DatasetError::Parse {
                line: 1,
                reason: format!("bad seed {s:?}"),
            })?;
            (
                seed,
                SplitRatios {
                    train: p(a)?,
                    val: p(b)?,
                    test: p(c)?,
                },
            )
        }
        _ => {
            return Err(DatasetError::Parse {
                line: 1,
                reason: "expected `seed <n> ratios <train> <val> <test>`".into(),
            })
        }
    };

    let mut train_pairs = Vec::new();
    let mut val = vec![Vec::new(); n_users];
    let mut test = vec![Vec::new(); n_users];
    let mut seen = 0usize;
    for (n, line) in side {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut t = line.split_whitespace();
        let u = parse_usize(t.next(), n, "user_index")?;
        let i = parse_usize(t.next(), n, "item_index")?;
        let p = t.next().and_then(Partition::from_tag).ok_or_else(|| DatasetError::Parse {
            line: n,
            reason: "expected partition tag train|val|test".into(),
        })?;
        if pairs.get(seen) != Some(&(u, i)) {
            return Err(DatasetError::Invalid(format!(
                "split sidecar line {n} does not match interaction cache"
            )));
        }
        if u >= n_users || i >= n_items {
            return Err(DatasetError::IndexOutOfRange {
                kind: if u >= n_users { "user" } else { "item" },
                index: if u >= n_users { u } else { i },
                len: if u >= n_users { n_users } else { n_items },
            });
        }
        seen += 1;
        match p {
            Partition::Train => train_pairs.push((u, i)),
            Partition::Val => val[u].push(i),
            Partition::Test => test[u].push(i),
        }
    }
    if seen != pairs.len() {
        return Err(DatasetError::Invalid("split sidecar is shorter than the interaction cache".into()));
    }
    let train = InteractionDataset::from_index_pairs(n_users, n_items, train_pairs)?;
    Ok(SplitDataset {
        train,
        val,
        test,
        ratios,
        seed,
    })
}
