//! Deep graph convolutional counting network.
//!
//! Message passing with row-normalized `D + I`, sort pooling keyed on the
//! last single-unit layer, two 1-D convolutions and a dense regression head.
//! Gradients are derived by hand; see `tests/gradient.rs` for the
//! finite-difference check.

mod model;
mod train;

pub use model::{
    message_passing_forward, predict_raw, readout_forward, sort_order, Architecture, FeatureNorm, GcLayer,
    ModelParams,
};
pub use train::{
    accuracy_report, architecture_for, discretize, evaluate, iteration_sweep, loss_and_gradients, predict, train,
    CountAccuracy, EpochRecord, EvalReport, LabeledGraphSample, SweepPoint, TrainConfig, MAX_COUNT,
};

use std::sync::Arc;

use ndarray::Array2;

use crate::geometry::NetworkGraph;
use crate::multibody::AttenuationSnapshot;

/// Dense 0/1 adjacency of a graph.
pub fn adjacency_matrix(graph: &NetworkGraph) -> Array2<f64> {
    let n = graph.num_nodes();
    let mut a = Array2::zeros((n, n));
    for &(u, v) in graph.links() {
        a[[u, v]] = 1.0;
    }
    a
}

/// Snapshot rows as a feature matrix.
pub fn feature_matrix(snapshot: &AttenuationSnapshot) -> Array2<f64> {
    let (n, w) = snapshot.shape();
    Array2::from_shape_fn((n, w), |(i, j)| snapshot.node_features[i][j])
}

impl LabeledGraphSample {
    pub fn from_snapshot(adjacency: Arc<Array2<f64>>, snapshot: &AttenuationSnapshot, label: u32) -> Self {
        Self {
            adjacency,
            features: feature_matrix(snapshot),
            label,
        }
    }
}
