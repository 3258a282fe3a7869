//! Central finite differences of the batch loss on a 6 x 5 toy dataset.
#![allow(dead_code)]

use cobrar_core::dataset::InteractionDataset;
use cobrar_core::models::{CollabModel, ModelKind};
use cobrar_core::training::batch_loss;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
/// Gradients below this magnitude are compared absolutely. Central differences of a
/// loss around 30 carry roundoff near `eps * 30 / H`, about 1e-9.
pub const FLOOR: f64 = 1e-5;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FLOOR)
}

/// 6 users x 5 items. User `u` always holds item `u % 5`, so every item has a user,
/// and misses one other item, so every user has a negative.
pub fn toy_dataset(rng: &mut ChaCha8Rng) -> InteractionDataset {
    let mut pairs = Vec::new();
    for u in 0..6 {
        let must = u % 5;
        let free = (must + rng.gen_range(1..5)) % 5;
        for i in 0..5 {
            if i == must || (i != free && rng.gen_bool(0.5)) {
                pairs.push((u, i));
            }
        }
    }
    InteractionDataset::from_index_pairs(6, 5, pairs).unwrap()
}

/// Scores this close to a clamp edge make `ln` too curved for central differences at
/// step `H`: a positive score of 2e-4 already gives truncation error above `REL_TOL`.
pub const CLAMP_MARGIN: f64 = 1e-2;

/// Checks every parameter of one random (model, batch) instance and returns the worst
/// relative error, or `None` when a score lies within [`CLAMP_MARGIN`] of a clamp edge.
pub fn batch_loss_fd_instance(seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = toy_dataset(&mut rng);
    let kind = if seed % 2 == 0 { ModelKind::CoBraR } else { ModelKind::DeepMF };
    let depth = rng.gen_range(1..4);
    let sizes: Vec<usize> = (0..depth).map(|_| rng.gen_range(2..6)).collect();
    let mut model = CollabModel::<f64>::new(kind, 6, 5, &sizes, 0.0, &mut rng).unwrap();
    // zero biases let a dead ReLU layer produce an all-zero embedding, where the
    // cosine is not differentiable
    for (name, p) in model.parameters_mut() {
        if name.ends_with("bias") {
            p.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        }
    }
    let pairs: Vec<(usize, usize)> = train.pairs().collect();
    let batch: Vec<(usize, usize)> = (0..rng.gen_range(1..5)).map(|_| pairs[rng.gen_range(0..pairs.len())]).collect();
    let n_neg = rng.gen_range(1..4);
    let mu = 1e-6;
    let batch_seed = rng.gen();

    let loss = |m: &CollabModel<f64>| -> f64 {
        let mut g = m.zero_grads();
        batch_loss(m, &train, &batch, n_neg, mu, &mut ChaCha8Rng::seed_from_u64(batch_seed), &mut g)
            .unwrap()
            .loss
    };
    let mut grads = model.zero_grads();
    let out = batch_loss(&model, &train, &batch, n_neg, mu, &mut ChaCha8Rng::seed_from_u64(batch_seed), &mut grads).unwrap();
    let scores = out.pos_scores.iter().chain(out.neg_scores.iter().flatten());
    if scores.clone().any(|&y| (y - mu).abs() < CLAMP_MARGIN || (y - (1.0 - mu)).abs() < CLAMP_MARGIN) {
        return None;
    }
    let analytic: Vec<Vec<f64>> = grads.tensors().into_iter().map(<[f64]>::to_vec).collect();

    let mut worst: f64 = 0.0;
    let n_tensors = analytic.len();
    for t in 0..n_tensors {
        for j in 0..analytic[t].len() {
            let orig = model.parameters_mut()[t].1[j];
            model.parameters_mut()[t].1[j] = orig + H;
            let fp = loss(&model);
            model.parameters_mut()[t].1[j] = orig - H;
            let fm = loss(&model);
            model.parameters_mut()[t].1[j] = orig;
            worst = worst.max(rel_err(analytic[t][j], (fp - fm) / (2.0 * H)));
        }
    }
    Some(worst)
}

/// Runs seeds from 0 until `n` well-conditioned instances were checked; returns the
/// worst relative error over them and the number of skipped seeds.
pub fn batch_loss_fd_sweep(n: usize) -> (f64, usize) {
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    let mut seed = 0;
    while checked < n {
        match batch_loss_fd_instance(seed) {
            Some(e) => {
                worst = worst.max(e);
                checked += 1;
            }
            None => skipped += 1,
        }
        seed += 1;
    }
    (worst, skipped)
}

