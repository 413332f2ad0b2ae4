mod oracles;

use defakehop::gbdt::{
    count_parameters, fit_gbdt, fit_gbdt_traced, predict_proba, GbdtConfig, GbdtModel, Tree, TreeNode,
};
use defakehop::pipeline::compute_auc;
use ndarray::Array2;
use oracles::tree_walk_proba;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn leaf(score: f64) -> TreeNode {
    TreeNode::Leaf { score }
}

fn split(feature: usize, threshold: f64, left: usize, right: usize) -> TreeNode {
    TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    }
}

fn xor_data(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
    let y = (0..n).map(|i| u8::from((x[[i, 0]] > 0.0) != (x[[i, 1]] > 0.0))).collect();
    (x, y)
}

#[test]
fn hand_built_three_tree_model() {
    let t1 = Tree::from_nodes(vec![split(0, 0.5, 1, 2), leaf(1.0), leaf(-1.0)]).unwrap();
    let t2 = Tree::from_nodes(vec![leaf(2.0)]).unwrap();
    let t3 = Tree::from_nodes(vec![split(1, 0.0, 1, 4), split(0, -1.0, 2, 3), leaf(0.5), leaf(0.25), leaf(-0.5)]).unwrap();
    let config = GbdtConfig {
        learning_rate: 0.1,
        ..GbdtConfig::default()
    };
    let model = GbdtModel::from_trees(vec![t1, t2, t3], 2, 0.2, config).unwrap();

    // 0.2 + 0.1 * (1.0 + 2.0 - 0.5)
    let p = predict_proba(&model, &[0.0, 1.0]).unwrap();
    assert!((p - 1.0 / (1.0 + (-0.45f64).exp())).abs() < 1e-15);
    // 0.2 + 0.1 * (-1.0 + 2.0 + 0.25)
    let p = predict_proba(&model, &[0.7, -0.3]).unwrap();
    assert!((p - 1.0 / (1.0 + (-0.325f64).exp())).abs() < 1e-15);
    // threshold ties go left: 0.2 + 0.1 * (1.0 + 2.0 + 0.5)
    let p = predict_proba(&model, &[-1.0, 0.0]).unwrap();
    assert!((p - 1.0 / (1.0 + (-0.55f64).exp())).abs() < 1e-15);

    assert_eq!(count_parameters(&model), (2 + 2) + 1 + (4 + 3));
    assert!(predict_proba(&model, &[0.0]).is_err());
}

#[test]
fn full_tree_counts_190() {
    let model = GbdtModel::from_trees(vec![Tree::full(64)], 1, 0.0, GbdtConfig::default()).unwrap();
    assert_eq!(count_parameters(&model), 190);
}

#[test]
fn fitted_model_matches_tree_walk() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 800;
    let x = Array2::from_shape_fn((n, 6), |_| rng.random_range(-2.0..2.0));
    let y: Vec<u8> = (0..n)
        .map(|i| u8::from(x[[i, 0]] + 0.5 * x[[i, 3]] * x[[i, 4]] + rng.random_range(-0.5..0.5) > 0.0))
        .collect();
    let config = GbdtConfig {
        max_trees: 60,
        ..GbdtConfig::default()
    };
    let model = fit_gbdt(x.view(), &y, &config).unwrap();
    assert!(!model.trees.is_empty());
    for row in x.rows() {
        let r = row.to_vec();
        let ours = predict_proba(&model, &r).unwrap();
        assert!((ours - tree_walk_proba(&model, &r)).abs() < 1e-12);
    }
}

#[test]
fn learns_xor() {
    let (x, y) = xor_data(2000, 1);
    let model = fit_gbdt(x.view(), &y, &GbdtConfig::default()).unwrap();
    let scores: Vec<f64> = x.rows().into_iter().map(|r| predict_proba(&model, &r.to_vec()).unwrap()).collect();
    assert!(compute_auc(&scores, &y).unwrap() >= 0.99);
}

#[test]
fn cap_and_monotone_loss_without_early_stopping() {
    let (x, y) = xor_data(400, 2);
    let config = GbdtConfig {
        max_trees: 150,
        validation_fraction: 0.0,
        ..GbdtConfig::default()
    };
    let (model, trace) = fit_gbdt_traced(x.view(), &y, &config).unwrap();
    assert!(model.trees.len() <= 150);
    assert_eq!(trace.train_loss.len(), model.trees.len() + 1);
    assert!(trace.train_loss.windows(2).all(|w| w[1] <= w[0]));
    for t in &model.trees {
        assert!(t.num_leaves() <= 64);
    }
}

#[test]
fn same_seed_same_model() {
    let (x, y) = xor_data(600, 3);
    let a = fit_gbdt(x.view(), &y, &GbdtConfig::default()).unwrap();
    let b = fit_gbdt(x.view(), &y, &GbdtConfig::default()).unwrap();
    assert_eq!(bincode::serialize(&a).unwrap(), bincode::serialize(&b).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn loss_never_increases(seed in 0u64..1000, n in 60usize..300, d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let mut y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        y[0] = 0;
        y[1] = 1;
        let config = GbdtConfig { max_trees: 40, min_data_in_leaf: 5, seed, ..GbdtConfig::default() };
        let (model, trace) = fit_gbdt_traced(x.view(), &y, &config).unwrap();
        prop_assert!(trace.train_loss.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(count_parameters(&model) <= 190 * 1000);
        for t in &model.trees {
            prop_assert!(t.num_leaves() <= config.max_leaves);
        }
    }
}
