use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use rfsl::net::{loss_and_gradients, Architecture, FeatureNorm, LabeledGraphSample, ModelParams};
use rfsl::rng::rng_from_seed;

fn random_sample(n: usize, seed: u64) -> LabeledGraphSample {
    let mut rng = rng_from_seed(seed);
    // sparse random graph plus a ring so every node has a neighbor
    let mut adj = Array2::<f64>::zeros((n, n));
    for u in 0..n {
        adj[[u, (u + 1) % n]] = 1.0;
        adj[[(u + 1) % n, u]] = 1.0;
        for v in 0..n {
            if u != v && rng.gen_bool(0.3) {
                adj[[u, v]] = 1.0;
            }
        }
    }
    let features = Array2::from_shape_fn((n, n - 1), |_| rng.gen_range(0.0..12.0));
    LabeledGraphSample {
        adjacency: Arc::new(adj),
        features,
        label: rng.gen_range(0..6),
    }
}

fn perturbed_loss(params: &ModelParams, sample: &LabeledGraphSample, tensor: usize, index: usize, delta: f64) -> f64 {
    let mut p = params.clone();
    p.tensors_mut()[tensor][index] += delta;
    loss_and_gradients(&p, &[sample]).unwrap().0
}

/// Largest relative error between analytic and central-difference gradients.
fn max_relative_error(n_nodes: usize, seed: u64, checks: usize, include_sort_channel: bool) -> f64 {
    let sample = random_sample(n_nodes, seed);
    let mut arch = Architecture::new(n_nodes, n_nodes - 1, 4);
    arch.include_sort_channel = include_sort_channel;
    let mut params = ModelParams::init(&arch, seed ^ 0xabc).unwrap();
    params.norm = FeatureNorm::fit([&sample.features], arch.input_width);
    // non-zero biases so every tensor is exercised away from the origin
    let mut rng = rng_from_seed(seed.wrapping_add(99));
    for t in params.tensors_mut() {
        if t.len() <= 128 {
            for x in t.iter_mut() {
                *x += rng.gen_range(-0.2..0.2);
            }
        }
    }
    let (_, grads) = loss_and_gradients(&params, &[&sample]).unwrap();
    let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let total: usize = sizes.iter().sum();
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..checks {
        let mut flat = rng.gen_range(0..total);
        let mut tensor = 0;
        while flat >= sizes[tensor] {
            flat -= sizes[tensor];
            tensor += 1;
        }
        let numeric = (perturbed_loss(&params, &sample, tensor, flat, eps)
            - perturbed_loss(&params, &sample, tensor, flat, -eps))
            / (2.0 * eps);
        let analytic = grads.tensors()[tensor][flat];
        let scale = analytic.abs().max(numeric.abs());
        let err = if scale < 1e-8 { (analytic - numeric).abs() } else { (analytic - numeric).abs() / scale };
        worst = worst.max(err);
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for (i, n) in [6usize, 8, 11, 13, 16].into_iter().enumerate() {
        let err = max_relative_error(n, 100 + i as u64, 50, false);
        assert!(err < 1e-4, "graph {i} ({n} nodes): relative error {err:e}");
    }
}

#[test]
fn gradients_with_sort_channel() {
    let err = max_relative_error(9, 7, 50, true);
    assert!(err < 1e-4, "relative error {err:e}");
}

#[test]
fn output_bias_gradient_is_twice_mean_residual() {
    let samples: Vec<_> = (0..4).map(|s| random_sample(7, s)).collect();
    let refs: Vec<_> = samples.iter().collect();
    let params = ModelParams::init(&Architecture::new(7, 6, 4), 5).unwrap();
    let (_, g) = loss_and_gradients(&params, &refs).unwrap();
    let mean_residual: f64 = samples
        .iter()
        .map(|s| rfsl::net::predict_raw(&params, s.adjacency.view(), s.features.view()).unwrap() - s.label as f64)
        .sum::<f64>()
        / 4.0;
    assert!((g.out_b[0] - 2.0 * mean_residual).abs() < 1e-12);
}

#[test]
fn perfect_prediction_has_zero_gradient() {
    let mut s = random_sample(6, 1);
    let mut params = ModelParams::zeros(&Architecture::new(6, 5, 4)).unwrap();
    params.out_b[0] = 3.0;
    s.label = 3;
    let (loss, g) = loss_and_gradients(&params, &[&s]).unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.tensors().iter().all(|t| t.iter().all(|&x| x == 0.0)));
}
