use std::sync::Arc;

use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rfsl::net::{
    accuracy_report, discretize, predict_raw, train, Architecture, FeatureNorm, LabeledGraphSample, ModelParams,
    TrainConfig,
};
use rfsl::rng::rng_from_seed;

fn random_sample(n: usize, seed: u64) -> LabeledGraphSample {
    let mut rng = rng_from_seed(seed);
    let mut adj = Array2::<f64>::zeros((n, n));
    for u in 0..n {
        for v in 0..u {
            if v + 1 == u || rng.gen_bool(0.4) {
                adj[[u, v]] = 1.0;
                adj[[v, u]] = 1.0;
            }
        }
    }
    LabeledGraphSample {
        adjacency: Arc::new(adj),
        features: Array2::from_shape_fn((n, n - 1), |_| rng.gen_range(0.0..15.0)),
        label: rng.gen_range(0..4),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn prediction_ignores_node_labels(seed in any::<u64>(), n in 4usize..12, k in 1usize..5, sort_channel in any::<bool>()) {
        let s = random_sample(n, seed);
        let mut arch = Architecture::new(n, n - 1, k);
        arch.include_sort_channel = sort_channel;
        let mut params = ModelParams::init(&arch, seed ^ 1).unwrap();
        params.norm = FeatureNorm::fit([&s.features], n - 1);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng_from_seed(seed ^ 2));
        // node i of the relabeled graph is node perm[i] of the original
        let adj = Array2::from_shape_fn((n, n), |(i, j)| s.adjacency[[perm[i], perm[j]]]);
        let feat = Array2::from_shape_fn((n, n - 1), |(i, c)| s.features[[perm[i], c]]);
        let a = predict_raw(&params, s.adjacency.view(), s.features.view()).unwrap();
        let b = predict_raw(&params, adj.view(), feat.view()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn discretize_rounds_halves_up_and_clamps(x in -5.0f64..30.0) {
        let d = discretize(x);
        prop_assert!(d <= 20);
        if (0.0..20.0).contains(&x) {
            prop_assert!((x - d as f64).abs() <= 0.5);
        }
    }
}

#[test]
fn discretize_edges() {
    assert_eq!(discretize(2.5), 3);
    assert_eq!(discretize(2.4999), 2);
    assert_eq!(discretize(-0.7), 0);
    assert_eq!(discretize(99.0), 20);
}

#[test]
fn accuracy_report_counts_exact_matches() {
    let r = accuracy_report([(1, 1), (1, 2), (2, 2), (2, 2), (3, 0)]);
    assert_eq!(r.overall, 3.0 / 5.0);
    assert_eq!(r.accuracy_at(1), Some(0.5));
    assert_eq!(r.accuracy_at(2), Some(1.0));
    assert_eq!(r.accuracy_at(3), Some(0.0));
    assert_eq!(r.accuracy_at(4), None);
    assert_eq!(r.per_n.iter().map(|c| c.samples).sum::<usize>(), 5);
    assert_eq!(accuracy_report([]).overall, 0.0);
}

#[test]
fn training_is_deterministic_and_learns_something() {
    let data: Vec<LabeledGraphSample> = (0..40).map(|i| random_sample(6, 1000 + i)).collect();
    let cfg = TrainConfig {
        max_epochs: 6,
        batch_size: 8,
        learning_rate: 5e-3,
        rng_seed: 11,
        ..TrainConfig::default()
    };
    let (a, hist_a) = train(&data, &cfg).unwrap();
    let (b, hist_b) = train(&data, &cfg).unwrap();
    assert_eq!(hist_a, hist_b);
    for (x, y) in a.tensors().iter().zip(b.tensors()) {
        assert!(x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
    assert!(a.is_finite());
    assert!(!hist_a.is_empty() && hist_a.len() <= 6);
    assert!(hist_a.last().unwrap().train_loss < hist_a[0].train_loss);
}

#[test]
fn training_rejects_bad_input() {
    assert!(train(&[], &TrainConfig::default()).is_err());
    let data = vec![random_sample(5, 1)];
    let bad = TrainConfig {
        iterations: 0,
        ..TrainConfig::default()
    };
    assert!(train(&data, &bad).is_err());
}
