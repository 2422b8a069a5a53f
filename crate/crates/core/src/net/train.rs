//! Loss, Adam training loop, evaluation and the iteration sweep.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{backward, predict_raw, Architecture, FeatureNorm, ModelParams};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Largest count the network reports.
pub const MAX_COUNT: u32 = 20;

/// One graph snapshot with its true target count.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraphSample {
    pub adjacency: Arc<Array2<f64>>,
    pub features: Array2<f64>,
    pub label: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    /// Stale epochs before the learning rate is halved; 0 disables decay.
    pub lr_decay_patience: usize,
    pub min_learning_rate: f64,
    pub rng_seed: u64,
    /// Share of the data held back for early stopping.
    pub validation_fraction: f64,
    pub iterations: usize,
    pub include_sort_channel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 200,
            early_stop_patience: 10,
            lr_decay_patience: 5,
            min_learning_rate: 1e-5,
            rng_seed: 0,
            validation_fraction: 0.1,
            iterations: 4,
            include_sort_channel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidArgument("validation_fraction must lie in [0, 1)".into()));
        }
        if !(1..=8).contains(&self.iterations) {
            return Err(Error::InvalidArgument("iterations must lie in 1..=8".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Mean squared error over the batch and its gradient.
pub fn loss_and_gradients(params: &ModelParams, batch: &[&LabeledGraphSample]) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let inv = 1.0 / batch.len() as f64;
    let parts: Vec<(f64, ModelParams)> = batch
        .par_iter()
        .map(|s| {
            let mut g = params.zeros_like();
            let label = s.label as f64;
            let y = backward(
                params,
                s.adjacency.view(),
                s.features.view(),
                |y| 2.0 * (y - label) * inv,
                &mut g,
            )?;
            Ok(((y - label).powi(2), g))
        })
        .collect::<Result<_>>()?;
    let mut iter = parts.into_iter();
    let (first_loss, mut grads) = iter.next().expect("non-empty batch");
    let mut loss = first_loss;
    for (l, g) in iter {
        loss += l;
        grads.add_scaled(&g, 1.0);
    }
    Ok((loss * inv, grads))
}

fn mean_loss(params: &ModelParams, data: &[&LabeledGraphSample]) -> Result<f64> {
    let sq: Vec<f64> = data
        .par_iter()
        .map(|s| predict_raw(params, s.adjacency.view(), s.features.view()).map(|y| (y - s.label as f64).powi(2)))
        .collect::<Result<_>>()?;
    Ok(sq.iter().sum::<f64>() / sq.len().max(1) as f64)
}

struct Adam {
    m: ModelParams,
    v: ModelParams,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &ModelParams, lr: f64) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for (((p, g), m), v) in tensors {
            for i in 0..p.len() {
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g[i];
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

/// Architecture implied by a dataset and a training config.
pub fn architecture_for(sample: &LabeledGraphSample, cfg: &TrainConfig) -> Architecture {
    let mut arch = Architecture::new(sample.features.nrows(), sample.features.ncols(), cfg.iterations);
    arch.include_sort_channel = cfg.include_sort_channel;
    arch
}

/// Train a counting network; the best-validation parameters are returned.
pub fn train(dataset: &[LabeledGraphSample], cfg: &TrainConfig) -> Result<(ModelParams, Vec<EpochRecord>)> {
    cfg.validate()?;
    let first = dataset
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty training set".into()))?;
    let labels: std::collections::BTreeSet<u32> = dataset.iter().map(|s| s.label).collect();
    if labels.len() < 2 {
        return Err(Error::InvalidArgument(
            "training data must contain at least two distinct labels".into(),
        ));
    }
    let arch = architecture_for(first, cfg);

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(cfg.rng_seed, 0)));
    let n_val = ((dataset.len() as f64 * cfg.validation_fraction).round() as usize).min(dataset.len() - 1);
    let val: Vec<&LabeledGraphSample> = order[..n_val].iter().map(|&i| &dataset[i]).collect();
    let fit: Vec<&LabeledGraphSample> = order[n_val..].iter().map(|&i| &dataset[i]).collect();

    let mut params = ModelParams::init(&arch, derive_seed(cfg.rng_seed, 1))?;
    params.norm = FeatureNorm::fit(fit.iter().map(|s| &s.features), arch.input_width);
    params.out_b[0] = fit.iter().map(|s| s.label as f64).sum::<f64>() / fit.len() as f64;
    for s in &fit {
        params.check_input(s.adjacency.view(), s.features.view())?;
    }

    let mut adam = Adam::new(&params, cfg.learning_rate);
    let mut shuffle_rng = rng_from_seed(derive_seed(cfg.rng_seed, 2));
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, params.clone());
    let mut stale = 0usize;
    let mut since_decay = 0usize;
    let mut idx: Vec<usize> = (0..fit.len()).collect();
    for epoch in 0..cfg.max_epochs {
        idx.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for chunk in idx.chunks(cfg.batch_size) {
            let batch: Vec<&LabeledGraphSample> = chunk.iter().map(|&i| fit[i]).collect();
            let (loss, grads) = loss_and_gradients(&params, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            total += loss * batch.len() as f64;
            adam.step(&mut params, &grads);
        }
        let train_loss = total / fit.len() as f64;
        let val_loss = if val.is_empty() {
            mean_loss(&params, &fit)?
        } else {
            mean_loss(&params, &val)?
        };
        if !val_loss.is_finite() || !params.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best.0 {
            best = (val_loss, params.clone());
            stale = 0;
            since_decay = 0;
        } else {
            stale += 1;
            since_decay += 1;
            if stale >= cfg.early_stop_patience {
                break;
            }
            if cfg.lr_decay_patience > 0 && since_decay >= cfg.lr_decay_patience {
                adam.lr = (adam.lr * 0.5).max(cfg.min_learning_rate);
                since_decay = 0;
            }
        }
    }
    Ok((best.1, history))
}

/// Rounded (halves up) and clamped count.
pub fn discretize(estimate: f64) -> u32 {
    (estimate + 0.5).floor().clamp(0.0, MAX_COUNT as f64) as u32
}

pub fn predict(params: &ModelParams, sample: &LabeledGraphSample) -> Result<u32> {
    predict_raw(params, sample.adjacency.view(), sample.features.view()).map(discretize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountAccuracy {
    pub n: u32,
    pub samples: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: f64,
    pub per_n: Vec<CountAccuracy>,
}

impl EvalReport {
    pub fn accuracy_at(&self, n: u32) -> Option<f64> {
        self.per_n.iter().find(|c| c.n == n).map(|c| c.accuracy)
    }
}

/// Exact-match accuracy from predicted counts.
pub fn accuracy_report(pairs: impl IntoIterator<Item = (u32, u32)>) -> EvalReport {
    let mut table: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (label, pred) in pairs {
        let e = table.entry(label).or_default();
        e.0 += usize::from(label == pred);
        e.1 += 1;
    }
    let (hit, total) = table.values().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    EvalReport {
        overall: if total == 0 { 0.0 } else { hit as f64 / total as f64 },
        per_n: table
            .into_iter()
            .map(|(n, (h, t))| CountAccuracy {
                n,
                samples: t,
                accuracy: h as f64 / t as f64,
            })
            .collect(),
    }
}

pub fn evaluate(params: &ModelParams, dataset: &[LabeledGraphSample]) -> Result<EvalReport> {
    let preds: Vec<u32> = dataset.par_iter().map(|s| predict(params, s)).collect::<Result<_>>()?;
    Ok(accuracy_report(dataset.iter().map(|s| s.label).zip(preds)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub iterations: usize,
    pub accuracy: f64,
    pub epochs: usize,
}

/// Held-out accuracy of one trained model per message-passing depth.
pub fn iteration_sweep(
    train_set: &[LabeledGraphSample],
    test_set: &[LabeledGraphSample],
    k_values: &[usize],
    cfg: &TrainConfig,
) -> Result<Vec<SweepPoint>> {
    k_values
        .iter()
        .map(|&k| {
            let c = TrainConfig {
                iterations: k,
                ..cfg.clone()
            };
            let (model, history) = train(train_set, &c)?;
            Ok(SweepPoint {
                iterations: k,
                accuracy: evaluate(&model, test_set)?.overall,
                epochs: history.len(),
            })
        })
        .collect()
}
