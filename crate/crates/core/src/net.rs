//! Fully connected sigmoid MLPs with one or two hidden layers.
//!
//! Every layer stores a `fan_out x (fan_in + 1)` matrix whose column 0 holds
//! the bias weight (the weight on an always-1 input). Layers are packed into
//! a flat parameter vector layer-major and row-major within a layer:
//!
//! ```text
//! [ W1[0][0..=D], W1[1][0..=D], ..., W2[0][0..=M1], ..., Wout[K-1][..] ]
//! ```
//!
//! This order is frozen; traces and saved parameter vectors depend on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Half-width of the uniform weight initialisation range.
pub const INIT_RANGE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("network needs 1 or 2 hidden layers, got {0}")]
    HiddenLayerCount(usize),
    #[error("layer dimensions must be positive")]
    ZeroWidth,
    #[error("parameter vector has length {got}, network expects {expected}")]
    ParameterLength { expected: usize, got: usize },
    #[error("batch has {got} features, network expects {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error("batch has {got} target columns, network expects {expected}")]
    OutputWidth { expected: usize, got: usize },
    #[error("batch is empty")]
    EmptyBatch,
}

/// Numerically stable logistic function.
///
/// The result is kept strictly inside (0, 1) even where the exact value
/// rounds to 0 or 1 in `f64`.
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Layer sizes of a network: `input -> hidden[0] [-> hidden[1]] -> output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    input_dim: usize,
    hidden: Vec<usize>,
    output_dim: usize,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden: &[usize], output_dim: usize) -> Result<Self, NetError> {
        if hidden.is_empty() || hidden.len() > 2 {
            return Err(NetError::HiddenLayerCount(hidden.len()));
        }
        if input_dim == 0 || output_dim == 0 || hidden.contains(&0) {
            return Err(NetError::ZeroWidth);
        }
        Ok(Self { input_dim, hidden: hidden.to_vec(), output_dim })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.hidden
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// `(fan_in, fan_out)` for every layer, input side first.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Total number of weights including biases.
    pub fn weight_count(&self) -> usize {
        self.layer_shapes().iter().map(|&(i, o)| (i + 1) * o).sum()
    }

    fn check_params(&self, weights: &[f64]) -> Result<(), NetError> {
        let expected = self.weight_count();
        if weights.len() != expected {
            return Err(NetError::ParameterLength { expected, got: weights.len() });
        }
        Ok(())
    }

    fn check_batch(&self, batch: &LabeledBatch) -> Result<(), NetError> {
        if batch.is_empty() {
            return Err(NetError::EmptyBatch);
        }
        if batch.input_dim() != self.input_dim {
            return Err(NetError::InputWidth { expected: self.input_dim, got: batch.input_dim() });
        }
        if batch.output_dim() != self.output_dim {
            return Err(NetError::OutputWidth { expected: self.output_dim, got: batch.output_dim() });
        }
        Ok(())
    }

    /// Splits a packed parameter slice into per-layer views.
    pub fn unpack<'w>(&self, weights: &'w [f64]) -> Result<Vec<LayerView<'w>>, NetError> {
        self.check_params(weights)?;
        let mut out = Vec::new();
        let mut offset = 0;
        for (fan_in, fan_out) in self.layer_shapes() {
            let len = (fan_in + 1) * fan_out;
            out.push(LayerView { fan_in, fan_out, weights: &weights[offset..offset + len] });
            offset += len;
        }
        Ok(out)
    }

    /// Inverse of [`Architecture::unpack`]: concatenates per-layer matrices.
    pub fn pack(&self, layers: &[Vec<f64>]) -> Result<ParameterVector, NetError> {
        let shapes = self.layer_shapes();
        let mut values = Vec::with_capacity(self.weight_count());
        if layers.len() != shapes.len() {
            return Err(NetError::ParameterLength {
                expected: self.weight_count(),
                got: layers.iter().map(Vec::len).sum(),
            });
        }
        for (layer, &(fan_in, fan_out)) in layers.iter().zip(&shapes) {
            if layer.len() != (fan_in + 1) * fan_out {
                return Err(NetError::ParameterLength {
                    expected: self.weight_count(),
                    got: layers.iter().map(Vec::len).sum(),
                });
            }
            values.extend_from_slice(layer);
        }
        Ok(ParameterVector(values))
    }

    /// Activations of every layer, input first. Each entry is `P x width`.
    fn activations(&self, weights: &[f64], batch: &LabeledBatch) -> Result<Vec<Vec<f64>>, NetError> {
        self.check_batch(batch)?;
        let layers = self.unpack(weights)?;
        let rows = batch.len();
        let mut acts = vec![batch.inputs.clone()];
        for layer in &layers {
            let prev = acts.last().expect("input activations");
            let mut next = vec![0.0; rows * layer.fan_out];
            for b in 0..rows {
                let a = &prev[b * layer.fan_in..(b + 1) * layer.fan_in];
                for j in 0..layer.fan_out {
                    let row = layer.row(j);
                    let z = row[0] + row[1..].iter().zip(a).map(|(w, x)| w * x).sum::<f64>();
                    next[b * layer.fan_out + j] = sigmoid(z);
                }
            }
            acts.push(next);
        }
        Ok(acts)
    }

    /// Network outputs, `P x K` row-major.
    pub fn forward(&self, weights: &[f64], batch: &LabeledBatch) -> Result<Vec<f64>, NetError> {
        let mut acts = self.activations(weights, batch)?;
        Ok(acts.pop().expect("output activations"))
    }

    /// Mean squared classification error scaled by `100 / (K * P)`.
    pub fn loss(&self, weights: &[f64], batch: &LabeledBatch) -> Result<f64, NetError> {
        let out = self.forward(weights, batch)?;
        Ok(scaled_sse(&out, &batch.targets, self.output_dim, batch.len()))
    }

    /// Loss and its gradient by back-propagation, gradient in pack order.
    pub fn loss_and_gradient(
        &self,
        weights: &[f64],
        batch: &LabeledBatch,
    ) -> Result<(f64, ParameterVector), NetError> {
        let acts = self.activations(weights, batch)?;
        let layers = self.unpack(weights)?;
        let rows = batch.len();
        let k = self.output_dim;
        let out = acts.last().expect("output activations");
        let loss = scaled_sse(out, &batch.targets, k, rows);
        let scale = 200.0 / (k * rows) as f64;

        // delta holds dE/dz for the current layer, P x fan_out.
        let mut delta: Vec<f64> = out
            .iter()
            .zip(&batch.targets)
            .map(|(&y, &t)| scale * (y - t) * y * (1.0 - y))
            .collect();

        let mut grads: Vec<Vec<f64>> = vec![Vec::new(); layers.len()];
        for (li, layer) in layers.iter().enumerate().rev() {
            let input = &acts[li];
            let mut g = vec![0.0; (layer.fan_in + 1) * layer.fan_out];
            for b in 0..rows {
                let a = &input[b * layer.fan_in..(b + 1) * layer.fan_in];
                for j in 0..layer.fan_out {
                    let dj = delta[b * layer.fan_out + j];
                    let row = &mut g[j * (layer.fan_in + 1)..(j + 1) * (layer.fan_in + 1)];
                    row[0] += dj;
                    for (gw, x) in row[1..].iter_mut().zip(a) {
                        *gw += dj * x;
                    }
                }
            }
            grads[li] = g;
            if li > 0 {
                let mut prev = vec![0.0; rows * layer.fan_in];
                for b in 0..rows {
                    for i in 0..layer.fan_in {
                        let back: f64 = (0..layer.fan_out)
                            .map(|j| layer.row(j)[i + 1] * delta[b * layer.fan_out + j])
                            .sum();
                        let a = input[b * layer.fan_in + i];
                        prev[b * layer.fan_in + i] = back * a * (1.0 - a);
                    }
                }
                delta = prev;
            }
        }
        Ok((loss, ParameterVector(grads.concat())))
    }

    pub fn gradient(&self, weights: &[f64], batch: &LabeledBatch) -> Result<ParameterVector, NetError> {
        self.loss_and_gradient(weights, batch).map(|(_, g)| g)
    }

    /// Uniform draw in `[-0.1, 0.1]` for every weight and bias, deterministic per seed.
    pub fn init_weights(&self, seed: u64) -> ParameterVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ParameterVector(
            (0..self.weight_count()).map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE)).collect(),
        )
    }
}

fn scaled_sse(out: &[f64], targets: &[f64], k: usize, rows: usize) -> f64 {
    let sse: f64 = out.iter().zip(targets).map(|(y, t)| (y - t) * (y - t)).sum();
    100.0 * sse / (k * rows) as f64
}

/// Borrowed weights of one layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerView<'w> {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: &'w [f64],
}

impl<'w> LayerView<'w> {
    /// Row `j`: bias first, then one weight per input.
    pub fn row(&self, j: usize) -> &'w [f64] {
        &self.weights[j * (self.fan_in + 1)..(j + 1) * (self.fan_in + 1)]
    }
}

/// Flat vector of all network weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Inputs and one-hot targets for `P` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    input_dim: usize,
    output_dim: usize,
}

impl LabeledBatch {
    /// `inputs` is `P x input_dim` and `targets` is `P x output_dim`, both row-major.
    pub fn new(inputs: Vec<f64>, targets: Vec<f64>, input_dim: usize, output_dim: usize) -> Result<Self, NetError> {
        if input_dim == 0 || output_dim == 0 {
            return Err(NetError::ZeroWidth);
        }
        let rows = inputs.len() / input_dim;
        if inputs.len() != rows * input_dim {
            return Err(NetError::InputWidth { expected: input_dim, got: inputs.len() % input_dim });
        }
        if targets.len() != rows * output_dim {
            return Err(NetError::OutputWidth { expected: output_dim, got: targets.len() / rows.max(1) });
        }
        if rows == 0 {
            return Err(NetError::EmptyBatch);
        }
        Ok(Self { inputs, targets, input_dim, output_dim })
    }

    /// Builds one-hot targets from class indices.
    pub fn from_labels(inputs: Vec<f64>, labels: &[usize], input_dim: usize, classes: usize) -> Result<Self, NetError> {
        let mut targets = vec![0.0; labels.len() * classes];
        for (b, &l) in labels.iter().enumerate() {
            if l >= classes {
                return Err(NetError::OutputWidth { expected: classes, got: l + 1 });
            }
            targets[b * classes + l] = 1.0;
        }
        Self::new(inputs, targets, input_dim, classes)
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.input_dim
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn input_row(&self, b: usize) -> &[f64] {
        &self.inputs[b * self.input_dim..(b + 1) * self.input_dim]
    }

    pub fn target_row(&self, b: usize) -> &[f64] {
        &self.targets[b * self.output_dim..(b + 1) * self.output_dim]
    }

    /// Copies the given rows (in the given order, duplicates allowed).
    pub fn select(&self, rows: &[usize]) -> Result<Self, NetError> {
        let mut inputs = Vec::with_capacity(rows.len() * self.input_dim);
        let mut targets = Vec::with_capacity(rows.len() * self.output_dim);
        for &r in rows {
            inputs.extend_from_slice(self.input_row(r));
            targets.extend_from_slice(self.target_row(r));
        }
        Self::new(inputs, targets, self.input_dim, self.output_dim)
    }
}

/// An architecture together with its current weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub architecture: Architecture,
    pub weights: ParameterVector,
}

impl Network {
    pub fn new(architecture: Architecture, weights: ParameterVector) -> Result<Self, NetError> {
        architecture.check_params(weights.as_slice())?;
        Ok(Self { architecture, weights })
    }

    pub fn initialized(architecture: Architecture, seed: u64) -> Self {
        let weights = architecture.init_weights(seed);
        Self { architecture, weights }
    }

    pub fn forward(&self, batch: &LabeledBatch) -> Result<Vec<f64>, NetError> {
        self.architecture.forward(self.weights.as_slice(), batch)
    }

    pub fn loss(&self, batch: &LabeledBatch) -> Result<f64, NetError> {
        self.architecture.loss(self.weights.as_slice(), batch)
    }

    pub fn gradient(&self, batch: &LabeledBatch) -> Result<ParameterVector, NetError> {
        self.architecture.gradient(self.weights.as_slice(), batch)
    }
}
