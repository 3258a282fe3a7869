//! Brute-force reference evaluator: full sorts, direct counting, no shared code with
//! the library's evaluation module.
#![allow(dead_code)]

use std::collections::BTreeSet;

use cobrar_core::dataset::{InteractionDataset, SplitDataset, SplitRatios};
use cobrar_core::evaluation::Phase;
use rand::Rng;

/// Random split on an `n_users x n_items` catalog. Every user keeps at least
/// `min_candidates` items outside train and val, and most users get test items.
pub fn random_split<R: Rng>(rng: &mut R, n_users: usize, n_items: usize, min_candidates: usize) -> SplitDataset {
    let mut train_pairs = Vec::new();
    let mut val = vec![Vec::new(); n_users];
    let mut test = vec![Vec::new(); n_users];
    let density = rng.gen_range(0.1..0.5);
    for u in 0..n_users {
        let mut known = 0;
        for i in 0..n_items {
            if rng.gen::<f64>() >= density {
                continue;
            }
            let roll = rng.gen_range(0..10);
            if roll >= 7 {
                test[u].push(i);
            } else if n_items - known > min_candidates {
                known += 1;
                if roll == 6 {
                    val[u].push(i);
                } else {
                    train_pairs.push((u, i));
                }
            }
        }
    }
    SplitDataset {
        train: InteractionDataset::from_index_pairs(n_users, n_items, train_pairs).unwrap(),
        val,
        test,
        ratios: SplitRatios::default(),
        seed: 0,
    }
}

/// Row-major `users x items` scores; with `levels > 0` values are drawn from that many
/// distinct levels so ties are common.
pub fn random_scores<R: Rng>(rng: &mut R, n_users: usize, n_items: usize, levels: u32) -> Vec<f64> {
    (0..n_users * n_items)
        .map(|_| {
            if levels > 0 {
                f64::from(rng.gen_range(0..levels)) / f64::from(levels)
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteReport {
    pub users: Vec<usize>,
    pub lists: Vec<Vec<usize>>,
    pub ndcg: Vec<f64>,
    pub arp: Vec<f64>,
    pub mean_ndcg: f64,
    pub mean_arp: f64,
    pub coverage: f64,
    pub pop_rsp: Option<f64>,
}

fn held_out(split: &SplitDataset, phase: Phase, u: usize) -> &[usize] {
    match phase {
        Phase::Val => &split.val[u],
        Phase::Test => &split.test[u],
    }
}

fn excluded(split: &SplitDataset, phase: Phase, u: usize) -> BTreeSet<usize> {
    let mut s: BTreeSet<usize> = split.train.user_items(u).iter().copied().collect();
    if phase == Phase::Test {
        s.extend(split.val[u].iter().copied());
    }
    s
}

/// Train interaction count of every item, by scanning the whole matrix.
pub fn popularity(train: &InteractionDataset) -> Vec<usize> {
    (0..train.n_items())
        .map(|i| (0..train.n_users()).filter(|&u| train.contains(u, i)).count())
        .collect()
}

/// Most popular items (ties: lower index first) added while the items already taken
/// hold less than 80% of all train interactions.
pub fn head_items(counts: &[usize]) -> Vec<bool> {
    let total: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(counts[i]), i));
    let mut head = vec![false; counts.len()];
    let mut before = 0;
    for i in order {
        if before * 10 < total * 8 {
            head[i] = true;
            before += counts[i];
        }
    }
    head
}

/// Candidates of `u` fully sorted by descending score, then ascending index.
pub fn full_ranking(scores: &[f64], n_items: usize, u: usize, exclude: &BTreeSet<usize>) -> Vec<usize> {
    let row = &scores[u * n_items..(u + 1) * n_items];
    let mut cand: Vec<usize> = (0..n_items).filter(|i| !exclude.contains(i)).collect();
    cand.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    cand
}

pub fn ndcg(list: &[usize], relevant: &[usize], k: usize) -> f64 {
    let rel: BTreeSet<usize> = relevant.iter().copied().collect();
    let mut dcg = 0.0;
    for (rank, item) in list.iter().take(k).enumerate() {
        if rel.contains(item) {
            dcg += 1.0 / ((rank + 2) as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for rank in 0..rel.len().min(k) {
        idcg += 1.0 / ((rank + 2) as f64).log2();
    }
    if idcg > 0.0 {
        dcg / idcg
    } else {
        0.0
    }
}

pub fn evaluate(scores: &[f64], split: &SplitDataset, phase: Phase, k: usize) -> BruteReport {
    let n_items = split.train.n_items();
    let counts = popularity(&split.train);
    let head = head_items(&counts);
    let users: Vec<usize> = (0..split.train.n_users())
        .filter(|&u| !held_out(split, phase, u).is_empty())
        .collect();
    let mut out = BruteReport {
        users: users.clone(),
        lists: Vec::new(),
        ndcg: Vec::new(),
        arp: Vec::new(),
        mean_ndcg: 0.0,
        mean_arp: 0.0,
        coverage: 0.0,
        pop_rsp: None,
    };
    let (mut rec_head, mut rec_tail, mut cand_head, mut cand_tail) = (0usize, 0usize, 0usize, 0usize);
    let mut seen = BTreeSet::new();
    for &u in &users {
        let ex = excluded(split, phase, u);
        let ranking = full_ranking(scores, n_items, u, &ex);
        let list: Vec<usize> = ranking[..k].to_vec();
        out.ndcg.push(ndcg(&list, held_out(split, phase, u), k));
        out.arp.push(list.iter().map(|&i| counts[i] as f64).sum::<f64>() / k as f64);
        for &i in &ranking {
            if head[i] {
                cand_head += 1;
            } else {
                cand_tail += 1;
            }
        }
        for &i in &list {
            if head[i] {
                rec_head += 1;
            } else {
                rec_tail += 1;
            }
            seen.insert(i);
        }
        out.lists.push(list);
    }
    let n = users.len().max(1) as f64;
    out.mean_ndcg = out.ndcg.iter().sum::<f64>() / n;
    out.mean_arp = out.arp.iter().sum::<f64>() / n;
    out.coverage = 100.0 * seen.len() as f64 / n_items as f64;
    if cand_head > 0 && cand_tail > 0 {
        let ph = rec_head as f64 / cand_head as f64;
        let pt = rec_tail as f64 / cand_tail as f64;
        // population std of two values over their mean
        out.pop_rsp = Some(if ph + pt == 0.0 { 0.0 } else { (ph - pt).abs() / (ph + pt) });
    }
    out
}

/// Expected mean NDCG@k when every user's candidates are put in uniformly random order:
/// each rank holds a relevant item with probability `relevant / candidates`.
pub fn expected_random_ndcg(split: &SplitDataset, phase: Phase, k: usize) -> f64 {
    let n_items = split.train.n_items();
    let mut sum = 0.0;
    let mut n = 0;
    for u in 0..split.train.n_users() {
        let rel = held_out(split, phase, u);
        if rel.is_empty() {
            continue;
        }
        let cands = n_items - excluded(split, phase, u).len();
        let hit = rel.len() as f64 / cands as f64;
        let dcg: f64 = (0..k.min(cands)).map(|r| hit / ((r + 2) as f64).log2()).sum();
        let idcg: f64 = (0..k.min(rel.len())).map(|r| 1.0 / ((r + 2) as f64).log2()).sum();
        sum += dcg / idcg;
        n += 1;
    }
    sum / n as f64
}

/// Scores every item by its train popularity, the same for all users.
pub fn popularity_scores(split: &SplitDataset) -> Vec<f64> {
    let counts = popularity(&split.train);
    (0..split.train.n_users())
        .flat_map(|_| counts.iter().map(|&c| c as f64))
        .collect()
}
