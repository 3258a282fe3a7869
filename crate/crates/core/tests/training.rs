mod common;

use cobrar_core::dataset::synthetic::BlockSpec;
use cobrar_core::dataset::{binarize_and_dedup, k_core_filter, split_user_based, SplitDataset, SplitRatios};
use cobrar_core::evaluation::{evaluate, Phase, ScoreMatrix};
use cobrar_core::training::{fit, fit_with, grid_search, ConfigGrid, TrainConfig};
use cobrar_core::ModelKind;
use common::brute;

fn small_blocks() -> SplitDataset {
    let spec = BlockSpec {
        n_users: 80,
        n_items: 40,
        n_blocks: 4,
        p_in_max: 0.5,
        p_in_min: 0.5,
        p_out: 0.02,
        seed: 3,
    };
    let ds = k_core_filter(&binarize_and_dedup(&spec.generate()).unwrap(), 2).unwrap();
    split_user_based(&ds, SplitRatios::default(), 1).unwrap()
}

fn quick_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 3e-3,
        l2_weight: 1e-4,
        batch_size: 32,
        n_neg: 3,
        dropout_rate: 0.1,
        max_epochs: 12,
        patience: 4,
        embedding_dim: 16,
        architecture: vec![32],
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic() {
    let split = small_blocks();
    let cfg = TrainConfig { max_epochs: 4, ..quick_config() };
    let a = fit::<f64>(ModelKind::CoBraR, &split, &cfg).unwrap();
    let b = fit::<f64>(ModelKind::CoBraR, &split, &cfg).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.model, b.model);
    let c = fit::<f64>(ModelKind::CoBraR, &split, &TrainConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(a.log, c.log);
}

#[test]
fn both_models_beat_popularity_on_blocks() {
    let split = small_blocks();
    let pop = brute::evaluate(&brute::popularity_scores(&split), &split, Phase::Test, 5).mean_ndcg;
    for kind in [ModelKind::CoBraR, ModelKind::DeepMF] {
        let cfg = TrainConfig {
            dropout_rate: if kind == ModelKind::DeepMF { 0.0 } else { 0.1 },
            ..quick_config()
        };
        let fitted = fit::<f64>(kind, &split, &cfg).unwrap();
        let table = fitted.model.embed_all(&split.train).unwrap();
        let ndcg = evaluate(&table, &split, Phase::Test, 5).unwrap().mean_ndcg;
        assert!(ndcg > pop, "{kind}: {ndcg} vs popularity {pop}");
    }
}

#[test]
fn restored_model_is_the_best_epoch() {
    let split = small_blocks();
    let mut seen = Vec::new();
    let fitted = fit_with::<f64>(ModelKind::CoBraR, &split, &quick_config(), |r| seen.push(*r)).unwrap();
    assert_eq!(seen, fitted.log.epochs);
    let best = fitted.log.best_val_ndcg().unwrap();
    assert!(fitted.log.epochs.iter().all(|e| e.val_ndcg <= best));
    assert!(fitted.log.epochs.iter().all(|e| e.train_loss.is_finite() && e.train_loss > 0.0));
    // the returned parameters reproduce the logged validation score
    let table = fitted.model.embed_all(&split.train).unwrap();
    let val = evaluate(&table, &split, Phase::Val, 5).unwrap().mean_ndcg;
    assert_eq!(val, best);
    if fitted.log.stopped_early {
        let last = fitted.log.epochs.last().unwrap().epoch;
        assert_eq!(last - fitted.log.best_epoch, quick_config().patience);
    }
}

#[test]
fn singleton_grid_equals_fit() {
    let split = small_blocks();
    let cfg = TrainConfig { max_epochs: 3, patience: 2, ..quick_config() };
    let fitted = fit::<f32>(ModelKind::DeepMF, &split, &cfg).unwrap();
    let grid = grid_search::<f32>(&split, ModelKind::DeepMF, &ConfigGrid::singleton(&cfg), 1, |_| {}).unwrap();
    assert_eq!(grid.best, 0);
    assert_eq!(grid.runs[0].log, fitted.log);
    assert_eq!(grid.model, fitted.model);
}

#[test]
fn grid_keeps_the_best_validation_run() {
    let split = small_blocks();
    let mut grid = ConfigGrid::singleton(&TrainConfig { max_epochs: 3, patience: 2, ..quick_config() });
    grid.learning_rate = vec![1e-7, 3e-3];
    grid.architecture = vec![vec![32], vec![8]];
    let outcome = grid_search::<f64>(&split, ModelKind::CoBraR, &grid, 2, |_| {}).unwrap();
    assert_eq!(outcome.runs.len(), 4);
    assert!(outcome.runs.iter().enumerate().all(|(i, r)| r.index == i));
    let best = outcome.best_run();
    for r in &outcome.runs {
        assert!(r.val_ndcg() <= best.val_ndcg());
        if r.val_ndcg() == best.val_ndcg() {
            assert!(r.params > best.params || (r.params == best.params && r.index >= best.index));
        }
    }
    let refit = fit::<f64>(ModelKind::CoBraR, &split, &best.config).unwrap();
    assert_eq!(refit.model, outcome.model);
    // same outcome regardless of how many lattice points run at once
    let serial = grid_search::<f64>(&split, ModelKind::CoBraR, &grid, 1, |_| {}).unwrap();
    assert_eq!(serial.best, outcome.best);
    assert_eq!(serial.runs, outcome.runs);
}

#[test]
fn popularity_baseline_agrees_with_library() {
    let split = small_blocks();
    let scores = brute::popularity_scores(&split);
    let lib = evaluate(
        &ScoreMatrix {
            n_items: split.n_items(),
            scores: scores.clone(),
        },
        &split,
        Phase::Test,
        5,
    )
    .unwrap();
    assert!((lib.mean_ndcg - brute::evaluate(&scores, &split, Phase::Test, 5).mean_ndcg).abs() < 1e-12);
}
