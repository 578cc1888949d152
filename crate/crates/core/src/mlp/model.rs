use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::LabelTable;
use crate::rng::SplitMix64;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    #[serde(rename = "relu")]
    Relu,
    #[serde(rename = "id")]
    Identity,
}

/// Fully connected layer, `weights` row-major `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    /// He-uniform weights, zero bias.
    pub fn he_uniform(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut SplitMix64) -> Self {
        let limit = (6.0 / in_dim as f64).sqrt();
        let mut layer = Self::zeros(in_dim, out_dim, activation);
        for w in &mut layer.weights {
            *w = rng.uniform(-limit, limit);
        }
        layer
    }

    /// Pre-activation `W·x + b` written to `out`.
    #[inline]
    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.in_dim).zip(&self.bias))
        {
            let mut acc = *b;
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            *o = acc;
        }
    }

    #[inline]
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.affine(x, out);
        if self.activation == Activation::Relu {
            for v in out.iter_mut() {
                *v = v.max(0.0);
            }
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Clothing,
    NonClothing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub category: Category,
    pub winner: usize,
}

/// Index of the largest value; the lowest index wins ties.
#[inline]
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
    labels: LabelTable,
}

/// Per-layer output buffers reused across calls to [`MlpModel::forward_with`].
#[derive(Debug, Clone)]
pub struct Scratch {
    outputs: Vec<Vec<f64>>,
}

/// Loss gradients with the same layout as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Flattened in the same order as [`MlpModel::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

impl MlpModel {
    pub fn new(layers: Vec<DenseLayer>, labels: LabelTable) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("model has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::Shape(format!("layer {i} has a zero dimension")));
            }
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(Error::Shape(format!("layer {i} parameter lengths do not match dims")));
            }
            if i > 0 && layers[i - 1].out_dim != l.in_dim {
                return Err(Error::Shape(format!(
                    "layer {i} expects {} inputs, previous layer emits {}",
                    l.in_dim,
                    layers[i - 1].out_dim
                )));
            }
            let last = i + 1 == layers.len();
            let want = if last { Activation::Identity } else { Activation::Relu };
            if l.activation != want {
                return Err(Error::Shape(format!("layer {i} must use {want:?}")));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!("layer {i} has non-finite parameters")));
            }
        }
        if layers.last().unwrap().out_dim != labels.len() {
            return Err(Error::Shape(format!(
                "output dim {} but {} labels",
                layers.last().unwrap().out_dim,
                labels.len()
            )));
        }
        Ok(Self { layers, labels })
    }

    /// Randomly initialised `input → hidden… → labels.len()` network.
    pub fn init(input_dim: usize, hidden: &[usize], labels: LabelTable, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(labels.len());
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let act = if i + 2 == dims.len() { Activation::Identity } else { Activation::Relu };
                DenseLayer::he_uniform(d[0], d[1], act, &mut rng)
            })
            .collect();
        Self::new(layers, labels)
    }

    /// The 4 → 16 → 8 → C architecture.
    pub fn standard(labels: LabelTable, seed: u64) -> Self {
        Self::init(4, &[16, 8], labels, seed).expect("standard dims are valid")
    }

    pub fn zeros(input_dim: usize, hidden: &[usize], labels: LabelTable) -> Result<Self> {
        let mut m = Self::init(input_dim, hidden, labels, 0)?;
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        Ok(m)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn labels(&self) -> &LabelTable {
        &self.labels
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// All parameters, layer by layer, weights before bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub(crate) fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            outputs: self.layers.iter().map(|l| vec![0.0; l.out_dim]).collect(),
        }
    }

    /// Logits for `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut s = self.scratch();
        Ok(self.forward_with(x, &mut s).to_vec())
    }

    /// Allocation-free forward pass; `x` must have `input_dim` entries.
    #[inline]
    pub fn forward_with<'s>(&self, x: &[f64], scratch: &'s mut Scratch) -> &'s [f64] {
        debug_assert_eq!(x.len(), self.input_dim());
        let outs = &mut scratch.outputs;
        for i in 0..self.layers.len() {
            let (done, rest) = outs.split_at_mut(i);
            let input = if i == 0 { x } else { &done[i - 1] };
            self.layers[i].apply(input, &mut rest[0]);
        }
        outs.last().unwrap()
    }

    pub fn classify(&self, x: &[f64]) -> Result<Classification> {
        let logits = self.forward(x)?;
        Ok(self.categorize(argmax(&logits)))
    }

    #[inline]
    pub fn categorize(&self, winner: usize) -> Classification {
        let category = if self.labels.is_clothing()[winner] {
            Category::Clothing
        } else {
            Category::NonClothing
        };
        Classification { category, winner }
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "model expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Mean softmax cross-entropy over `batch` and its gradient.
    ///
    /// Samples are accumulated in slice order, so the result is bitwise
    /// reproducible.
    pub fn loss_and_grad(&self, batch: &[(&[f64], usize)]) -> (f64, Gradients) {
        let mut grads = Gradients::zeros_like(self);
        let n_layers = self.layers.len();
        let mut acts: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.out_dim]).collect();
        let mut delta: Vec<Vec<f64>> = acts.clone();
        let mut loss = 0.0;
        for &(x, label) in batch {
            for i in 0..n_layers {
                let (done, rest) = acts.split_at_mut(i);
                let input = if i == 0 { x } else { &done[i - 1] };
                self.layers[i].apply(input, &mut rest[0]);
            }
            let logits = &acts[n_layers - 1];
            let (sample_loss, probs) = softmax_ce(logits, label);
            loss += sample_loss;
            delta[n_layers - 1].copy_from_slice(&probs);
            delta[n_layers - 1][label] -= 1.0;
            for i in (0..n_layers).rev() {
                let layer = &self.layers[i];
                let input = if i == 0 { x } else { &acts[i - 1] };
                let (dw, db) = (&mut grads.weights[i], &mut grads.bias[i]);
                for o in 0..layer.out_dim {
                    let d = delta[i][o];
                    db[o] += d;
                    for (g, v) in dw[o * layer.in_dim..(o + 1) * layer.in_dim].iter_mut().zip(input) {
                        *g += d * v;
                    }
                }
                if i > 0 {
                    let (lower, upper) = delta.split_at_mut(i);
                    let prev = &mut lower[i - 1];
                    prev.iter_mut().for_each(|v| *v = 0.0);
                    for o in 0..layer.out_dim {
                        let d = upper[0][o];
                        for (p, w) in prev
                            .iter_mut()
                            .zip(&layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim])
                        {
                            *p += d * w;
                        }
                    }
                    // ReLU derivative, zero at the kink.
                    for (p, a) in prev.iter_mut().zip(&acts[i - 1]) {
                        if *a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                }
            }
        }
        let n = batch.len().max(1) as f64;
        for g in grads.weights.iter_mut().chain(grads.bias.iter_mut()) {
            g.iter_mut().for_each(|v| *v /= n);
        }
        (loss / n, grads)
    }

    /// Mean cross-entropy without gradients.
    pub fn loss(&self, batch: &[(&[f64], usize)]) -> f64 {
        let mut s = self.scratch();
        let total: f64 = batch
            .iter()
            .map(|&(x, label)| softmax_ce(self.forward_with(x, &mut s), label).0)
            .sum();
        total / batch.len().max(1) as f64
    }

    /// Sign pattern of every hidden pre-activation, used to spot ReLU kinks.
    pub(crate) fn activation_pattern(&self, x: &[f64]) -> Vec<bool> {
        let mut pattern = Vec::new();
        let mut cur = x.to_vec();
        for l in &self.layers {
            let mut out = vec![0.0; l.out_dim];
            l.affine(&cur, &mut out);
            if l.activation == Activation::Relu {
                pattern.extend(out.iter().map(|v| *v > 0.0));
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            cur = out;
        }
        pattern
    }
}

/// Numerically stable softmax cross-entropy: `(loss, probabilities)`.
pub(crate) fn softmax_ce(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() - (logits[label] - max);
    (loss, exps.into_iter().map(|e| e / sum).collect())
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    w: Vec<f64>,
    b: Vec<f64>,
    act: Activation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    dims: Vec<usize>,
    layers: Vec<LayerFile>,
    labels: Vec<String>,
    is_clothing: Vec<bool>,
}

impl MlpModel {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION,
            dims: self.dims(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    w: l.weights.clone(),
                    b: l.bias.clone(),
                    act: l.activation,
                })
                .collect(),
            labels: self.labels.names().to_vec(),
            is_clothing: self.labels.is_clothing().to_vec(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("model file: {e}")))?;
        if file.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "model version {} not supported (expected {MODEL_VERSION})",
                file.version
            )));
        }
        if file.dims.len() != file.layers.len() + 1 {
            return Err(Error::Format("dims do not match layer count".into()));
        }
        let layers = file
            .layers
            .into_iter()
            .zip(file.dims.windows(2))
            .map(|(l, d)| DenseLayer {
                in_dim: d[0],
                out_dim: d[1],
                weights: l.w,
                bias: l.b,
                activation: l.act,
            })
            .collect();
        let labels = LabelTable::new(file.labels, file.is_clothing)?;
        Self::new(layers, labels).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    MlpModel::from_json(&text)
}
