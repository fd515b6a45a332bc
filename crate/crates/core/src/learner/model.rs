// SPDX-License-Identifier: Apache-2.0

use super::{LearnerError, Result};
use crate::data::Dataset;
use crate::rng::RngStream;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand_distr::{Distribution, Normal};

/// Optimizer accumulators, shaped like the parameters they belong to.
#[derive(Clone, Debug, PartialEq)]
pub enum OptimizerSlots {
    Empty,
    Sgd { velocity: Gradients },
    Adam { first: Gradients, second: Gradients, step: u64 },
}

/// Weights, biases, optimizer state and schedule position of an MLP with
/// ReLU hidden layers. `weights[l]` has shape `dims[l + 1] x dims[l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub(crate) dims: Vec<usize>,
    pub(crate) weights: Vec<Array2<f64>>,
    pub(crate) biases: Vec<Array1<f64>>,
    pub(crate) slots: OptimizerSlots,
    pub(crate) epoch: usize,
}

/// Per-parameter tensors with the model's layout (gradients, velocities, moments).
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &ModelState) -> Self {
        Self {
            weights: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Output of [`ModelState::forward`]. `activations[l]` is the input to layer `l`.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub logits: Array2<f64>,
    activations: Vec<Array2<f64>>,
}

impl ForwardPass {
    /// Post-ReLU activations feeding the final linear layer.
    pub fn penultimate(&self) -> &Array2<f64> {
        self.activations.last().expect("at least one layer")
    }

    pub fn into_parts(mut self) -> (Array2<f64>, Array2<f64>) {
        let pen = self.activations.pop().expect("at least one layer");
        (self.logits, pen)
    }
}

impl ModelState {
    /// He-normal weights (std `sqrt(2 / fan_in)`), zero biases, epoch 0.
    pub fn he_init(dims: &[usize], rng: &RngStream) -> Result<Self> {
        check_dims(dims)?;
        let mut r = rng.derive("he");
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            weights.push(Array2::from_shape_simple_fn((fan_out, fan_in), || normal.sample(&mut r)));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self { dims: dims.to_vec(), weights, biases, slots: OptimizerSlots::Empty, epoch: 0 })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let weights = dims.windows(2).map(|w| Array2::zeros((w[1], w[0]))).collect();
        let biases = dims[1..].iter().map(|&d| Array1::zeros(d)).collect();
        Ok(Self { dims: dims.to_vec(), weights, biases, slots: OptimizerSlots::Empty, epoch: 0 })
    }

    /// Builds a model from explicit parameters; shapes must chain.
    pub fn from_parameters(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(LearnerError::Shape("need one bias per weight matrix".into()));
        }
        let mut dims = vec![weights[0].ncols()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != *dims.last().unwrap() || b.len() != w.nrows() {
                return Err(LearnerError::Shape(format!("layer {l} does not chain")));
            }
            dims.push(w.nrows());
        }
        check_dims(&dims)?;
        Ok(Self { dims, weights, biases, slots: OptimizerSlots::Empty, epoch: 0 })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn penultimate_dim(&self) -> usize {
        self.dims[self.dims.len() - 2]
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn slots(&self) -> &OptimizerSlots {
        &self.slots
    }

    /// Schedule position (completed epochs across warm starts).
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn set_epoch(&mut self, epoch: usize) {
        self.epoch = epoch;
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    pub fn forward(&self, batch: ArrayView2<'_, f64>) -> Result<ForwardPass> {
        if batch.ncols() != self.dims[0] {
            return Err(LearnerError::Shape(format!(
                "batch has {} columns, model expects {}",
                batch.ncols(),
                self.dims[0]
            )));
        }
        let last = self.weights.len() - 1;
        let mut activations = Vec::with_capacity(self.weights.len());
        let mut h = batch.to_owned();
        for l in 0..last {
            let mut z = h.dot(&self.weights[l].t());
            z += &self.biases[l];
            z.mapv_inplace(|v| v.max(0.0));
            activations.push(h);
            h = z;
        }
        let mut logits = h.dot(&self.weights[last].t());
        logits += &self.biases[last];
        activations.push(h);
        Ok(ForwardPass { logits, activations })
    }

    /// Mean softmax cross-entropy and its gradient.
    pub fn loss_and_grad(&self, batch: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Gradients)> {
        self.weighted_loss_and_grad(batch, labels, None)
    }

    /// Cross-entropy averaged with instance weights `w_i / sum(w)`; uniform when `None`.
    pub fn weighted_loss_and_grad(
        &self,
        batch: ArrayView2<'_, f64>,
        labels: &[usize],
        weights: Option<&[f64]>,
    ) -> Result<(f64, Gradients)> {
        let m = batch.nrows();
        if labels.len() != m || weights.is_some_and(|w| w.len() != m) {
            return Err(LearnerError::Shape(format!("{m} rows with {} labels", labels.len())));
        }
        if m == 0 {
            return Err(LearnerError::Shape("empty batch".into()));
        }
        let c = self.num_classes();
        if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
            return Err(LearnerError::Shape(format!("label {bad} outside {c} classes")));
        }
        let scale: Vec<f64> = match weights {
            None => vec![1.0 / m as f64; m],
            Some(w) => {
                let total: f64 = w.iter().sum();
                if !(total > 0.0) {
                    return Err(LearnerError::InvalidParameter("instance weights must sum to a positive value".into()));
                }
                w.iter().map(|v| v / total).collect()
            }
        };

        let pass = self.forward(batch)?;
        let probs = softmax_rows(&pass.logits);
        let mut loss = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let row = pass.logits.row(i);
            let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            let li = lse - row[y];
            if !li.is_finite() {
                return Err(LearnerError::NonFiniteLoss { row: i });
            }
            loss += scale[i] * li;
        }

        // delta at the logits: (softmax - onehot) scaled per instance
        let mut delta = probs;
        for (i, &y) in labels.iter().enumerate() {
            delta[[i, y]] -= 1.0;
            delta.row_mut(i).mapv_inplace(|v| v * scale[i]);
        }
        let layers = self.weights.len();
        let mut gw = vec![Array2::zeros((0, 0)); layers];
        let mut gb = vec![Array1::zeros(0); layers];
        for l in (0..layers).rev() {
            let input = &pass.activations[l];
            gw[l] = delta.t().dot(input);
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l]);
                Zip::from(&mut back).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        Ok((loss, Gradients { weights: gw, biases: gb }))
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(LearnerError::Shape(format!("layer dims {dims:?} need >= 2 positive entries")));
    }
    Ok(())
}

/// Row-wise numerically stable softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: ndarray::ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Class probabilities, `m x C`; every row is a distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMatrix(Array2<f64>);

impl ProbMatrix {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        for (i, row) in rows.rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                return Err(LearnerError::Shape(format!("row {i} is not a probability vector (sum {sum})")));
            }
        }
        Ok(Self(rows))
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.0.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Rows `rows` as a new matrix.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self(self.0.select(Axis(0), rows))
    }
}

/// Penultimate-layer features, `m x d_pen`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix(Array2<f64>);

impl EmbeddingMatrix {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::Shape("non-finite embedding".into()));
        }
        Ok(Self(rows))
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self(self.0.select(Axis(0), rows))
    }
}

const CHUNK: usize = 2048;

fn forward_indices(model: &ModelState, ds: &Dataset, indices: &[usize]) -> Result<(Array2<f64>, Array2<f64>)> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= ds.len()) {
        return Err(LearnerError::Shape(format!("index {bad} outside dataset of {}", ds.len())));
    }
    let mut logits = Array2::zeros((indices.len(), model.num_classes()));
    let mut pen = Array2::zeros((indices.len(), model.penultimate_dim()));
    for (k, chunk) in indices.chunks(CHUNK).enumerate() {
        let x = ds.gather(chunk);
        let (lg, pn) = model.forward(x.view())?.into_parts();
        let start = k * CHUNK;
        logits.slice_mut(s![start..start + chunk.len(), ..]).assign(&lg);
        pen.slice_mut(s![start..start + chunk.len(), ..]).assign(&pn);
    }
    Ok((logits, pen))
}

pub fn predict_probs(model: &ModelState, ds: &Dataset, indices: &[usize]) -> Result<ProbMatrix> {
    let (logits, _) = forward_indices(model, ds, indices)?;
    Ok(ProbMatrix(softmax_rows(&logits)))
}

pub fn embed(model: &ModelState, ds: &Dataset, indices: &[usize]) -> Result<EmbeddingMatrix> {
    let (_, pen) = forward_indices(model, ds, indices)?;
    EmbeddingMatrix::new(pen)
}

/// Fraction of `indices` (all rows when `None`) whose argmax prediction matches the label.
pub fn accuracy_on(model: &ModelState, ds: &Dataset, indices: Option<&[usize]>) -> Result<f64> {
    let all: Vec<usize>;
    let idx = match indices {
        Some(idx) => idx,
        None => {
            all = (0..ds.len()).collect();
            &all
        }
    };
    if idx.is_empty() {
        return Ok(0.0);
    }
    let (logits, _) = forward_indices(model, ds, idx)?;
    let correct = logits
        .rows()
        .into_iter()
        .zip(idx)
        .filter(|(row, &i)| argmax(row.view()) == ds.labels()[i])
        .count();
    Ok(correct as f64 / idx.len() as f64)
}

pub fn test_accuracy(model: &ModelState, test: &Dataset) -> Result<f64> {
    accuracy_on(model, test, None)
}

/// Per-instance gradient of the cross-entropy w.r.t. the final linear layer,
/// flattened as `(p - onehot(y)) (x) [h; 1]` in class-major order.
pub fn last_layer_gradients(probs: ArrayView2<'_, f64>, penultimate: ArrayView2<'_, f64>, labels: &[usize]) -> Array2<f64> {
    let (m, c) = probs.dim();
    let d = penultimate.ncols() + 1;
    let mut out = Array2::zeros((m, c * d));
    for i in 0..m {
        for k in 0..c {
            let r = probs[[i, k]] - if labels[i] == k { 1.0 } else { 0.0 };
            for j in 0..d - 1 {
                out[[i, k * d + j]] = r * penultimate[[i, j]];
            }
            out[[i, k * d + d - 1]] = r;
        }
    }
    out
}
