//! Architecture, parameters, forward pass and manual reverse mode.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Shape descriptor of a counting network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub num_nodes: usize,
    pub input_width: usize,
    /// Widths of the message-passing layers; the last one must be 1 (sort key).
    pub gc_widths: Vec<usize>,
    /// Also feed the sort-key layer into the convolution.
    pub include_sort_channel: bool,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub conv2_kernel: usize,
    pub pool: usize,
    pub dense_units: usize,
    /// Sorted rows are zero-padded up to this count.
    pub min_sorted_nodes: usize,
}

impl Architecture {
    /// Default layout for `iterations` message-passing layers.
    pub fn new(num_nodes: usize, input_width: usize, iterations: usize) -> Self {
        let mut gc_widths = vec![32; iterations.saturating_sub(1)];
        gc_widths.push(1);
        Self {
            num_nodes,
            input_width,
            gc_widths,
            include_sort_channel: false,
            conv1_filters: 16,
            conv2_filters: 32,
            conv2_kernel: 5,
            pool: 2,
            dense_units: 128,
            min_sorted_nodes: 10,
        }
    }

    pub fn iterations(&self) -> usize {
        self.gc_widths.len()
    }

    /// Layers whose outputs are concatenated for the convolution.
    pub fn concat_layers(&self) -> Vec<usize> {
        let k = self.iterations();
        if k == 1 || self.include_sort_channel {
            (0..k).collect()
        } else {
            (0..k - 1).collect()
        }
    }

    /// Channels per sorted node; this is also the first kernel size and stride.
    pub fn channels(&self) -> usize {
        self.concat_layers().iter().map(|&l| self.gc_widths[l]).sum()
    }

    pub fn sorted_len(&self) -> usize {
        self.num_nodes.max(self.min_sorted_nodes)
    }

    pub fn pooled_len(&self) -> usize {
        self.sorted_len() / self.pool
    }

    pub fn conv2_len(&self) -> usize {
        (self.pooled_len() + 1).saturating_sub(self.conv2_kernel)
    }

    pub fn dense_input(&self) -> usize {
        self.conv2_len() * self.conv2_filters
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_nodes < 2 {
            return Err(Error::TooFewNodes(format!(
                "{} nodes; sort pooling needs at least 2",
                self.num_nodes
            )));
        }
        let bad = |m: &str| Err(Error::InvalidArgument(format!("architecture: {m}")));
        if self.input_width == 0 {
            return bad("input_width must be >= 1");
        }
        if self.gc_widths.is_empty() || self.gc_widths.len() > 8 {
            return bad("between 1 and 8 message-passing layers");
        }
        if self.gc_widths.last() != Some(&1) || self.gc_widths.contains(&0) {
            return bad("layer widths must be positive and end with 1");
        }
        if self.conv1_filters == 0 || self.conv2_filters == 0 || self.dense_units == 0 || self.pool == 0 {
            return bad("filter, unit and pool sizes must be positive");
        }
        if self.conv2_len() == 0 {
            return bad("sorted rows too short for the second convolution");
        }
        Ok(())
    }
}

/// Per-column standardization of node features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl FeatureNorm {
    pub fn identity(width: usize) -> Self {
        Self {
            mean: Array1::zeros(width),
            std: Array1::ones(width),
        }
    }

    /// Statistics over every node row of every matrix. Constant columns get std 1.
    pub fn fit<'a>(features: impl IntoIterator<Item = &'a Array2<f64>>, width: usize) -> Self {
        let mut count = 0usize;
        let mut sum = Array1::<f64>::zeros(width);
        let mut rows: Vec<&Array2<f64>> = Vec::new();
        for f in features {
            sum += &f.sum_axis(Axis(0));
            count += f.nrows();
            rows.push(f);
        }
        if count == 0 {
            return Self::identity(width);
        }
        let mean = sum / count as f64;
        let mut var = Array1::<f64>::zeros(width);
        for f in rows {
            for row in f.rows() {
                Zip::from(&mut var).and(&row).and(&mean).for_each(|v, &x, &m| *v += (x - m) * (x - m));
            }
        }
        let std = var.mapv(|v| {
            let s = (v / count as f64).sqrt();
            if s < 1e-12 {
                1.0
            } else {
                s
            }
        });
        Self { mean, std }
    }

    pub fn apply(&self, features: ArrayView2<f64>) -> Array2<f64> {
        (&features - &self.mean) / &self.std
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcLayer {
    /// Self term, `in × out`.
    pub w0: Array2<f64>,
    /// Neighbor term, `in × out`.
    pub w1: Array2<f64>,
    pub bias: Array1<f64>,
}

/// All tensors of a counting network. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub arch: Architecture,
    pub gc: Vec<GcLayer>,
    /// `filters × channels`.
    pub conv1_w: Array2<f64>,
    pub conv1_b: Array1<f64>,
    /// `filters × (kernel · conv1_filters)`, column `j · conv1_filters + f`.
    pub conv2_w: Array2<f64>,
    pub conv2_b: Array1<f64>,
    pub dense1_w: Array2<f64>,
    pub dense1_b: Array1<f64>,
    pub out_w: Array1<f64>,
    pub out_b: Array1<f64>,
    pub norm: FeatureNorm,
}

impl ModelParams {
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        let mut gc = Vec::new();
        let mut fan_in = arch.input_width;
        for &w in &arch.gc_widths {
            gc.push(GcLayer {
                w0: Array2::zeros((fan_in, w)),
                w1: Array2::zeros((fan_in, w)),
                bias: Array1::zeros(w),
            });
            fan_in = w;
        }
        Ok(Self {
            arch: arch.clone(),
            gc,
            conv1_w: Array2::zeros((arch.conv1_filters, arch.channels())),
            conv1_b: Array1::zeros(arch.conv1_filters),
            conv2_w: Array2::zeros((arch.conv2_filters, arch.conv2_kernel * arch.conv1_filters)),
            conv2_b: Array1::zeros(arch.conv2_filters),
            dense1_w: Array2::zeros((arch.dense_units, arch.dense_input())),
            dense1_b: Array1::zeros(arch.dense_units),
            out_w: Array1::zeros(arch.dense_units),
            out_b: Array1::zeros(1),
            norm: FeatureNorm::identity(arch.input_width),
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        let mut rng = rng_from_seed(seed);
        let mut glorot = |a: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for x in a.iter_mut() {
                *x = rng.gen_range(-limit..limit);
            }
        };
        for layer in &mut p.gc {
            let (i, o) = layer.w0.dim();
            glorot(layer.w0.as_slice_mut().unwrap(), i, o);
            glorot(layer.w1.as_slice_mut().unwrap(), i, o);
        }
        let c = arch.channels();
        glorot(p.conv1_w.as_slice_mut().unwrap(), c, arch.conv1_filters);
        let k2 = arch.conv2_kernel * arch.conv1_filters;
        glorot(p.conv2_w.as_slice_mut().unwrap(), k2, arch.conv2_filters);
        glorot(p.dense1_w.as_slice_mut().unwrap(), arch.dense_input(), arch.dense_units);
        glorot(p.out_w.as_slice_mut().unwrap(), arch.dense_units, 1);
        Ok(p)
    }

    /// Zeroed tensors of the same shape (normalization copied).
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// Every trainable tensor as a flat slice, in a fixed order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for l in &self.gc {
            v.push(l.w0.as_slice().unwrap());
            v.push(l.w1.as_slice().unwrap());
            v.push(l.bias.as_slice().unwrap());
        }
        for t in [&self.conv1_w, &self.conv2_w, &self.dense1_w] {
            v.push(t.as_slice().unwrap());
        }
        for t in [&self.conv1_b, &self.conv2_b, &self.dense1_b, &self.out_w, &self.out_b] {
            v.push(t.as_slice().unwrap());
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.gc {
            v.push(l.w0.as_slice_mut().unwrap());
            v.push(l.w1.as_slice_mut().unwrap());
            v.push(l.bias.as_slice_mut().unwrap());
        }
        v.push(self.conv1_w.as_slice_mut().unwrap());
        v.push(self.conv2_w.as_slice_mut().unwrap());
        v.push(self.dense1_w.as_slice_mut().unwrap());
        v.push(self.conv1_b.as_slice_mut().unwrap());
        v.push(self.conv2_b.as_slice_mut().unwrap());
        v.push(self.dense1_b.as_slice_mut().unwrap());
        v.push(self.out_w.as_slice_mut().unwrap());
        v.push(self.out_b.as_slice_mut().unwrap());
        v
    }

    /// Every tensor has the shape its architecture implies.
    pub fn check_shapes(&self) -> Result<()> {
        let reference = Self::zeros(&self.arch)?;
        let ok = self.gc.len() == reference.gc.len()
            && self.gc.iter().zip(&reference.gc).all(|(a, b)| {
                a.w0.dim() == b.w0.dim() && a.w1.dim() == b.w1.dim() && a.bias.dim() == b.bias.dim()
            })
            && self.conv1_w.dim() == reference.conv1_w.dim()
            && self.conv1_b.dim() == reference.conv1_b.dim()
            && self.conv2_w.dim() == reference.conv2_w.dim()
            && self.conv2_b.dim() == reference.conv2_b.dim()
            && self.dense1_w.dim() == reference.dense1_w.dim()
            && self.dense1_b.dim() == reference.dense1_b.dim()
            && self.out_w.dim() == reference.out_w.dim()
            && self.out_b.dim() == reference.out_b.dim()
            && self.norm.mean.dim() == self.arch.input_width
            && self.norm.std.dim() == self.arch.input_width;
        if !ok {
            return Err(Error::ShapeMismatch("parameter tensors disagree with the architecture".into()));
        }
        if !self.is_finite() || self.norm.std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidArgument("non-finite parameters or non-positive feature std".into()));
        }
        Ok(())
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// `self += scale · other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub(crate) fn check_input(&self, adjacency: ArrayView2<f64>, features: ArrayView2<f64>) -> Result<()> {
        let n = self.arch.num_nodes;
        if adjacency.dim() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "adjacency is {:?}, model expects {n}x{n}",
                adjacency.dim()
            )));
        }
        if features.dim() != (n, self.arch.input_width) {
            return Err(Error::ShapeMismatch(format!(
                "features are {:?}, model expects {n}x{}",
                features.dim(),
                self.arch.input_width
            )));
        }
        Ok(())
    }
}

/// Row scale `1 / (deg + 1)` and the scaled adjacency `S·D`.
fn propagation(adjacency: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let scale = adjacency.sum_axis(Axis(1)).mapv(|d| 1.0 / (d + 1.0));
    let sd = &adjacency * &scale.view().insert_axis(Axis(1));
    (scale, sd)
}

fn scale_rows(a: &Array2<f64>, scale: &Array1<f64>) -> Array2<f64> {
    a * &scale.view().insert_axis(Axis(1))
}

fn tanh_grad(grad: &mut Array2<f64>, act: &Array2<f64>) {
    Zip::from(grad).and(act).for_each(|g, &a| *g *= 1.0 - a * a);
}

/// Message passing on raw features: returns `Z_1..Z_K`.
pub fn message_passing_forward(
    params: &ModelParams,
    adjacency: ArrayView2<f64>,
    features: ArrayView2<f64>,
) -> Result<Vec<Array2<f64>>> {
    params.check_input(adjacency, features)?;
    let (scale, sd) = propagation(adjacency);
    let mut z = params.norm.apply(features);
    let mut out = Vec::with_capacity(params.gc.len());
    for layer in &params.gc {
        let mut h = scale_rows(&z, &scale).dot(&layer.w0) + sd.dot(&z).dot(&layer.w1);
        h += &layer.bias;
        h.mapv_inplace(f64::tanh);
        out.push(h.clone());
        z = h;
    }
    Ok(out)
}

/// Node order by descending sort key, ties by lower index.
pub fn sort_order(key: &Array2<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..key.nrows()).collect();
    order.sort_by(|&a, &b| key[[b, 0]].total_cmp(&key[[a, 0]]).then(a.cmp(&b)));
    order
}

struct ReadoutCache {
    order: Vec<usize>,
    sorted: Array2<f64>,
    c1: Array2<f64>,
    pool_idx: Array2<usize>,
    cols: Array2<f64>,
    c2: Array2<f64>,
    flat: Array1<f64>,
    hidden: Array1<f64>,
}

fn readout_cached(params: &ModelParams, embeddings: &[Array2<f64>]) -> Result<(f64, ReadoutCache)> {
    let arch = &params.arch;
    if embeddings.len() != arch.iterations() {
        return Err(Error::ShapeMismatch(format!(
            "{} embeddings for {} layers",
            embeddings.len(),
            arch.iterations()
        )));
    }
    let n = embeddings[0].nrows();
    if n < 2 {
        return Err(Error::TooFewNodes(format!("{n} nodes")));
    }
    if n != arch.num_nodes {
        return Err(Error::ShapeMismatch(format!("{n} nodes, model expects {}", arch.num_nodes)));
    }
    let order = sort_order(embeddings.last().unwrap());
    let channels = arch.channels();
    let mut sorted = Array2::<f64>::zeros((arch.sorted_len(), channels));
    for (rank, &node) in order.iter().enumerate() {
        let mut c = 0;
        for &l in &arch.concat_layers() {
            let z = &embeddings[l];
            let w = z.ncols();
            sorted.slice_mut(s![rank, c..c + w]).assign(&z.row(node));
            c += w;
        }
    }

    let mut c1 = sorted.dot(&params.conv1_w.t());
    c1 += &params.conv1_b;
    c1.mapv_inplace(f64::tanh);

    let pooled_len = arch.pooled_len();
    let f1 = arch.conv1_filters;
    let mut pooled = Array2::<f64>::zeros((pooled_len, f1));
    let mut pool_idx = Array2::<usize>::zeros((pooled_len, f1));
    for q in 0..pooled_len {
        for f in 0..f1 {
            let mut best = q * arch.pool;
            for r in best + 1..(q + 1) * arch.pool {
                if c1[[r, f]] > c1[[best, f]] {
                    best = r;
                }
            }
            pooled[[q, f]] = c1[[best, f]];
            pool_idx[[q, f]] = best;
        }
    }

    let l2 = arch.conv2_len();
    let kernel = arch.conv2_kernel;
    let mut cols = Array2::<f64>::zeros((l2, kernel * f1));
    for r in 0..l2 {
        for j in 0..kernel {
            cols.slice_mut(s![r, j * f1..(j + 1) * f1]).assign(&pooled.row(r + j));
        }
    }
    let mut c2 = cols.dot(&params.conv2_w.t());
    c2 += &params.conv2_b;
    c2.mapv_inplace(f64::tanh);

    let flat = Array1::from_iter(c2.iter().copied());
    let mut hidden = params.dense1_w.dot(&flat) + &params.dense1_b;
    hidden.mapv_inplace(f64::tanh);
    let y = params.out_w.dot(&hidden) + params.out_b[0];
    Ok((
        y,
        ReadoutCache {
            order,
            sorted,
            c1,
            pool_idx,
            cols,
            c2,
            flat,
            hidden,
        },
    ))
}

/// Sort pooling, convolutions and dense head; returns the raw estimate.
pub fn readout_forward(params: &ModelParams, embeddings: &[Array2<f64>]) -> Result<f64> {
    readout_cached(params, embeddings).map(|r| r.0)
}

/// Unclamped estimate for one graph.
pub fn predict_raw(params: &ModelParams, adjacency: ArrayView2<f64>, features: ArrayView2<f64>) -> Result<f64> {
    let z = message_passing_forward(params, adjacency, features)?;
    readout_forward(params, &z)
}

/// Accumulate `d_out · ∂y/∂θ` into `grads`; returns the estimate `y`.
pub(crate) fn backward(
    params: &ModelParams,
    adjacency: ArrayView2<f64>,
    features: ArrayView2<f64>,
    d_out_of: impl FnOnce(f64) -> f64,
    grads: &mut ModelParams,
) -> Result<f64> {
    params.check_input(adjacency, features)?;
    let arch = &params.arch;
    let (scale, sd) = propagation(adjacency);
    let x0 = params.norm.apply(features);
    let mut inputs = Vec::with_capacity(params.gc.len());
    let mut embeddings: Vec<Array2<f64>> = Vec::with_capacity(params.gc.len());
    for layer in &params.gc {
        let z = embeddings.last().unwrap_or(&x0);
        let sz = scale_rows(z, &scale);
        let sdz = sd.dot(z);
        let mut h = sz.dot(&layer.w0) + sdz.dot(&layer.w1);
        h += &layer.bias;
        h.mapv_inplace(f64::tanh);
        inputs.push((sz, sdz));
        embeddings.push(h);
    }
    let (y, cache) = readout_cached(params, &embeddings)?;
    let dy = d_out_of(y);

    // dense head
    grads.out_w.scaled_add(dy, &cache.hidden);
    grads.out_b[0] += dy;
    let mut dh = &params.out_w * dy;
    Zip::from(&mut dh).and(&cache.hidden).for_each(|g, &a| *g *= 1.0 - a * a);
    let dh_col = dh.view().insert_axis(Axis(1));
    let flat_row = cache.flat.view().insert_axis(Axis(0));
    grads.dense1_w += &dh_col.dot(&flat_row);
    grads.dense1_b += &dh;
    let dflat = params.dense1_w.t().dot(&dh);

    // second convolution
    let mut dc2 = dflat.into_shape_with_order(cache.c2.dim()).expect("flat length matches");
    tanh_grad(&mut dc2, &cache.c2);
    grads.conv2_w += &dc2.t().dot(&cache.cols);
    grads.conv2_b += &dc2.sum_axis(Axis(0));
    let dcols = dc2.dot(&params.conv2_w);
    let f1 = arch.conv1_filters;
    let mut dpooled = Array2::<f64>::zeros((arch.pooled_len(), f1));
    for r in 0..arch.conv2_len() {
        for j in 0..arch.conv2_kernel {
            let mut row = dpooled.row_mut(r + j);
            row += &dcols.slice(s![r, j * f1..(j + 1) * f1]);
        }
    }

    // pooling and first convolution
    let mut dc1 = Array2::<f64>::zeros(cache.c1.dim());
    for ((q, f), &src) in cache.pool_idx.indexed_iter() {
        dc1[[src, f]] += dpooled[[q, f]];
    }
    tanh_grad(&mut dc1, &cache.c1);
    grads.conv1_w += &dc1.t().dot(&cache.sorted);
    grads.conv1_b += &dc1.sum_axis(Axis(0));
    let dsorted = dc1.dot(&params.conv1_w);

    // scatter back to node embeddings
    let mut dz: Vec<Array2<f64>> = embeddings.iter().map(|z| Array2::zeros(z.dim())).collect();
    for (rank, &node) in cache.order.iter().enumerate() {
        let mut c = 0;
        for &l in &arch.concat_layers() {
            let w = dz[l].ncols();
            let mut row = dz[l].row_mut(node);
            row += &dsorted.slice(s![rank, c..c + w]);
            c += w;
        }
    }

    // message passing
    for k in (0..params.gc.len()).rev() {
        let layer = &params.gc[k];
        let mut dh = std::mem::take(&mut dz[k]);
        tanh_grad(&mut dh, &embeddings[k]);
        let (sz, sdz) = &inputs[k];
        let g = &mut grads.gc[k];
        g.w0 += &sz.t().dot(&dh);
        g.w1 += &sdz.t().dot(&dh);
        g.bias += &dh.sum_axis(Axis(0));
        if k > 0 {
            let da = scale_rows(&dh.dot(&layer.w0.t()), &scale) + sd.t().dot(&dh.dot(&layer.w1.t()));
            dz[k - 1] += &da;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { 1.0 })
    }

    #[test]
    fn table_shapes() {
        let arch = Architecture::new(20, 19, 4);
        assert_eq!(arch.channels(), 96);
        assert_eq!(arch.sorted_len(), 20);
        assert_eq!(arch.pooled_len(), 10);
        assert_eq!(arch.conv2_len(), 6);
        let p = ModelParams::init(&arch, 1).unwrap();
        let feats = Array2::from_shape_fn((20, 19), |(i, j)| ((i * 7 + j) % 5) as f64);
        let z = message_passing_forward(&p, complete(20).view(), feats.view()).unwrap();
        let dims: Vec<_> = z.iter().map(|m| m.dim()).collect();
        assert_eq!(dims, vec![(20, 32), (20, 32), (20, 32), (20, 1)]);
        assert!(z.iter().flatten().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn zero_model_outputs_bias() {
        let arch = Architecture::new(6, 5, 4);
        let mut p = ModelParams::zeros(&arch).unwrap();
        p.out_b[0] = 3.25;
        let feats = Array2::from_elem((6, 5), 2.0);
        let z = message_passing_forward(&p, complete(6).view(), feats.view()).unwrap();
        assert!(z.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(readout_forward(&p, &z).unwrap(), 3.25);
    }

    #[test]
    fn single_iteration_uses_key_layer() {
        let arch = Architecture::new(12, 11, 1);
        assert_eq!(arch.concat_layers(), vec![0]);
        assert_eq!(arch.channels(), 1);
        let arch8 = Architecture::new(12, 11, 8);
        assert_eq!(arch8.channels(), 7 * 32);
    }

    #[test]
    fn small_graph_is_padded() {
        let arch = Architecture::new(4, 3, 4);
        assert_eq!(arch.sorted_len(), 10);
        assert_eq!(arch.conv2_len(), 1);
        assert!(Architecture::new(1, 1, 4).validate().is_err());
    }

    #[test]
    fn shape_mismatch_reported() {
        let p = ModelParams::init(&Architecture::new(6, 5, 4), 0).unwrap();
        let err = predict_raw(&p, complete(5).view(), Array2::zeros((5, 5)).view()).unwrap_err();
        assert_eq!(err.category(), "shape-mismatch");
    }

    #[test]
    fn norm_fit_standardizes() {
        let a = Array2::from_shape_vec((3, 2), vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0]).unwrap();
        let n = FeatureNorm::fit([&a], 2);
        assert_eq!(n.std[1], 1.0);
        let z = n.apply(a.view());
        assert!(z.column(0).sum().abs() < 1e-12);
        let sd = (z.column(0).mapv(|v| v * v).sum() / 3.0).sqrt();
        assert!((sd - 1.0).abs() < 1e-12);
    }
}
