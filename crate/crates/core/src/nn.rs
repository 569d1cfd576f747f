//! Multi-layer perceptrons as defining functions.
//!
//! A model computes `sigma(theta^K . sigma(Theta^{K-1} ... sigma(Theta^1 x)))`
//! where every weight row carries its bias as a trailing entry acting on a
//! constant input of one. When a model is `row_normalized`, each augmented row
//! (weights and bias together) has unit Euclidean norm.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::seeded_rng;
use crate::defining_fn::Surface;
use crate::error::{check_dim, Error, Result};

/// Unit-norm tolerance for row-normalized models.
pub const ROW_NORM_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Sigmoid,
    Tanh,
    Relu,
    LeakyRelu { slope: f64 },
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn leaky_relu(slope: f64) -> Result<Self> {
        let a = Activation::LeakyRelu { slope };
        a.validate()?;
        Ok(a)
    }

    fn validate(self) -> Result<()> {
        match self {
            Activation::LeakyRelu { slope } if !(slope > 0.0 && slope < 1.0) => Err(
                Error::invalid(format!("leaky_relu slope must be in (0, 1), got {slope}")),
            ),
            _ => Ok(()),
        }
    }

    /// Parses `identity`, `sigmoid`, `tanh`, `relu`, `leaky_relu` or
    /// `leaky_relu(<slope>)`.
    pub fn parse(tag: &str) -> Result<Self> {
        let tag = tag.trim();
        let act = match tag {
            "identity" | "linear" => Activation::Identity,
            "sigmoid" => Activation::Sigmoid,
            "tanh" => Activation::Tanh,
            "relu" => Activation::Relu,
            "leaky_relu" => Activation::LeakyRelu {
                slope: DEFAULT_LEAKY_SLOPE,
            },
            _ => {
                let slope = tag
                    .strip_prefix("leaky_relu(")
                    .and_then(|s| s.strip_suffix(')'))
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::invalid(format!("unknown activation `{tag}`")))?;
                Activation::LeakyRelu { slope }
            }
        };
        act.validate()?;
        Ok(act)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::LeakyRelu { .. } => "leaky_relu",
        }
    }

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
        }
    }

    /// Derivative at pre-activation `z`. Kinks take the left slope, so ReLU
    /// has derivative 0 at 0.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }

    /// `sigma^{-1}(y)`, or `None` when the activation is not invertible or `y`
    /// is outside its range.
    pub fn inverse(self, y: f64) -> Option<f64> {
        match self {
            Activation::Identity => Some(y),
            Activation::Sigmoid if y > 0.0 && y < 1.0 => Some((y / (1.0 - y)).ln()),
            Activation::Tanh if y > -1.0 && y < 1.0 => Some(y.atanh()),
            Activation::LeakyRelu { slope } => Some(if y > 0.0 { y } else { y / slope }),
            _ => None,
        }
    }

    pub fn is_invertible(self) -> bool {
        !matches!(self, Activation::Relu)
    }

    pub fn is_smooth(self) -> bool {
        matches!(
            self,
            Activation::Identity | Activation::Sigmoid | Activation::Tanh
        )
    }
}

/// One fully connected layer. `weights` is row-major with shape
/// `outputs x (inputs + 1)`; the last column is the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(rows: Vec<Vec<f64>>, activation: Activation) -> Result<Self> {
        activation.validate()?;
        let outputs = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if outputs == 0 || width < 2 {
            return Err(Error::invalid(
                "layer needs at least one row of at least one weight plus a bias",
            ));
        }
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("layer rows have inconsistent lengths"));
        }
        let weights: Vec<f64> = rows.into_iter().flatten().collect();
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("layer weights must be finite"));
        }
        Ok(Self {
            inputs: width - 1,
            outputs,
            weights,
            activation,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.inputs + 1;
        &self.weights[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.outputs).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn preactivate(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.outputs).map(|i| {
            let row = self.row(i);
            let (w, b) = row.split_at(self.inputs);
            w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + b[0]
        }));
    }

    fn normalize_rows(&mut self) {
        let w = self.inputs + 1;
        for row in self.weights.chunks_mut(w) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }

    fn max_row_norm_deviation(&self) -> f64 {
        self.weights
            .chunks(self.inputs + 1)
            .map(|r| (r.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Replaces each group of rows by its uniform average. The result has one
    /// row per group.
    pub fn avg_pooled(&self, groups: &[Vec<usize>]) -> Result<DenseLayer> {
        DenseLayer::new(avgpool_as_matrix(&self.rows(), groups)?, self.activation)
    }
}

/// Intermediate values from a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[0]` is the input; `activations[k]` is the output of layer `k`.
    activations: Vec<Vec<f64>>,
    preactivations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> f64 {
        self.activations.last().expect("trace has an input")[0]
    }

    pub fn output_preactivation(&self) -> f64 {
        self.preactivations.last().expect("model has a layer")[0]
    }
}

/// A K-layer perceptron with a single output node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
    row_normalized: bool,
}

impl MlpModel {
    pub fn new(layers: Vec<DenseLayer>, row_normalized: bool) -> Result<Self> {
        let last = layers
            .last()
            .ok_or_else(|| Error::invalid("model needs at least one layer"))?;
        if last.outputs != 1 {
            return Err(Error::invalid(format!(
                "final layer must have one output, has {}",
                last.outputs
            )));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::invalid(format!(
                    "layer {k} has {} outputs but layer {} expects {} inputs",
                    pair[0].outputs,
                    k + 1,
                    pair[1].inputs
                )));
            }
        }
        let model = Self {
            layers,
            row_normalized,
        };
        if row_normalized && model.max_row_norm_deviation() > ROW_NORM_TOLERANCE {
            return Err(Error::invalid(
                "row_normalized model has a row whose norm deviates from 1",
            ));
        }
        Ok(model)
    }

    /// A single node `activation(theta . [x, 1])`; `theta` includes the bias
    /// as its last entry.
    pub fn perceptron(theta: Vec<f64>, activation: Activation) -> Result<Self> {
        Self::new(vec![DenseLayer::new(vec![theta], activation)?], false)
    }

    /// Random model with layer widths `widths` (input first, must end in 1).
    ///
    /// Weights and biases are drawn uniformly from `[-1/sqrt(fan_in),
    /// 1/sqrt(fan_in)]`; rows are then normalized if `row_normalized`.
    pub fn random(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        seed: u64,
        row_normalized: bool,
    ) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::invalid(format!("invalid layer widths {widths:?}")));
        }
        if *widths.last().unwrap() != 1 {
            return Err(Error::invalid("final width must be 1"));
        }
        let mut rng = seeded_rng(seed);
        let n_layers = widths.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for (k, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let rows = (0..fan_out)
                .map(|_| {
                    (0..=fan_in)
                        .map(|_| rng.random_range(-bound..=bound))
                        .collect()
                })
                .collect();
            let act = if k + 1 == n_layers { output } else { hidden };
            let mut layer = DenseLayer::new(rows, act)?;
            if row_normalized {
                layer.normalize_rows();
            }
            layers.push(layer);
        }
        Self::new(layers, row_normalized)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn row_normalized(&self) -> bool {
        self.row_normalized
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().unwrap().activation
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
    }

    /// All weights, layer by layer, each row-major with biases last.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim(self.n_params(), params.len())?;
        let mut offset = 0;
        for layer in &mut self.layers {
            let n = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Rescales every augmented row to unit norm and marks the model as
    /// row-normalized.
    pub fn normalize_rows(&mut self) {
        for layer in &mut self.layers {
            layer.normalize_rows();
        }
        self.row_normalized = true;
    }

    pub fn max_row_norm_deviation(&self) -> f64 {
        self.layers
            .iter()
            .map(DenseLayer::max_row_norm_deviation)
            .fold(0.0, f64::max)
    }

    pub fn trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        check_dim(self.input_dim(), x.len())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut preactivations = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        for layer in &self.layers {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.preactivate(activations.last().unwrap(), &mut z);
            activations.push(z.iter().map(|&v| layer.activation.apply(v)).collect());
            preactivations.push(z);
        }
        Ok(ForwardTrace {
            activations,
            preactivations,
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x.len())?;
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for layer in &self.layers {
            layer.preactivate(&a, &mut z);
            a.clear();
            a.extend(z.iter().map(|&v| layer.activation.apply(v)));
        }
        Ok(a[0])
    }

    /// Reverse pass from `delta_out = dL/dz_K` (the gradient at the output
    /// pre-activation). Returns `dL/dx`; when `param_grad` is given,
    /// `dL/dparams` is added into it using the [`MlpModel::params`] layout.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        delta_out: f64,
        mut param_grad: Option<&mut [f64]>,
    ) -> Vec<f64> {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for layer in &self.layers {
            offsets.push(acc);
            acc += layer.weights.len();
        }
        if let Some(g) = param_grad.as_deref() {
            assert_eq!(g.len(), acc, "parameter gradient buffer has wrong length");
        }

        let mut delta = vec![delta_out];
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let input = &trace.activations[k];
            let width = layer.inputs + 1;
            if let Some(g) = param_grad.as_deref_mut() {
                let g = &mut g[offsets[k]..offsets[k] + layer.weights.len()];
                for (i, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut g[i * width..(i + 1) * width];
                    for (gj, aj) in row.iter_mut().zip(input) {
                        *gj += d * aj;
                    }
                    row[layer.inputs] += d;
                }
            }
            let mut upstream = vec![0.0; layer.inputs];
            for (i, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (u, w) in upstream.iter_mut().zip(&layer.row(i)[..layer.inputs]) {
                    *u += d * w;
                }
            }
            if k == 0 {
                return upstream;
            }
            let prev = &self.layers[k - 1];
            delta = upstream
                .iter()
                .zip(&trace.preactivations[k - 1])
                .map(|(u, &z)| u * prev.activation.derivative(z))
                .collect();
        }
        unreachable!("loop returns at the first layer")
    }

    /// Exact gradient of [`MlpModel::forward`] with respect to the input.
    pub fn grad_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        let trace = self.trace(x)?;
        let delta = self
            .output_activation()
            .derivative(trace.output_preactivation());
        Ok(self.backward(&trace, delta, None))
    }

    /// Exact gradient of `upstream * forward(x)` with respect to every
    /// weight, shaped like the layers (`grads[k]` is row-major, bias last).
    pub fn grad_params(&self, x: &[f64], upstream: f64) -> Result<Vec<Vec<f64>>> {
        let trace = self.trace(x)?;
        let delta = upstream
            * self
                .output_activation()
                .derivative(trace.output_preactivation());
        let mut flat = vec![0.0; self.n_params()];
        self.backward(&trace, delta, Some(&mut flat));
        let mut out = Vec::with_capacity(self.layers.len());
        let mut offset = 0;
        for layer in &self.layers {
            out.push(flat[offset..offset + layer.weights.len()].to_vec());
            offset += layer.weights.len();
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Surface for MlpModel {
    fn input_dim(&self) -> usize {
        MlpModel::input_dim(self)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.forward(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.grad_input(x)
    }
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    weights: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    row_normalized: bool,
    layers: Vec<LayerJson>,
}

impl From<MlpModel> for ModelJson {
    fn from(m: MlpModel) -> Self {
        ModelJson {
            row_normalized: m.row_normalized,
            layers: m
                .layers
                .iter()
                .map(|l| LayerJson {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    activation: l.activation,
                    weights: l.rows(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelJson> for MlpModel {
    type Error = Error;

    fn try_from(raw: ModelJson) -> Result<Self> {
        let layers = raw
            .layers
            .into_iter()
            .map(|l| {
                let layer = DenseLayer::new(l.weights, l.activation)?;
                if layer.inputs != l.inputs || layer.outputs != l.outputs {
                    return Err(Error::invalid(format!(
                        "declared layer shape {}x{} does not match weights {}x{}",
                        l.outputs, l.inputs, layer.outputs, layer.inputs
                    )));
                }
                Ok(layer)
            })
            .collect::<Result<Vec<_>>>()?;
        MlpModel::new(layers, raw.row_normalized)
    }
}

/// Max-pooling over surfaces: the largest member response at `x` and the
/// index of the member that produced it (lowest index on ties).
pub fn maxpool_surface<S: Surface>(members: &[S], x: &[f64]) -> Result<(f64, usize)> {
    let first = members
        .first()
        .ok_or_else(|| Error::invalid("max-pool needs at least one member"))?;
    let dim = first.input_dim();
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, m) in members.iter().enumerate() {
        check_dim(dim, m.input_dim())?;
        let v = m.value(x)?;
        if v > best.0 || i == 0 {
            best = (v, i);
        }
    }
    Ok(best)
}

/// The max-pooled surface of its members, itself a [`Surface`]. The
/// gradient is that of the maximizing member.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPool<S> {
    members: Vec<S>,
}

impl<S: Surface> MaxPool<S> {
    pub fn new(members: Vec<S>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::invalid("max-pool needs at least one member"))?;
        let dim = first.input_dim();
        for m in &members {
            check_dim(dim, m.input_dim())?;
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[S] {
        &self.members
    }

    pub fn argmax(&self, x: &[f64]) -> Result<usize> {
        Ok(maxpool_surface(&self.members, x)?.1)
    }
}

impl<S: Surface> Surface for MaxPool<S> {
    fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(maxpool_surface(&self.members, x)?.0)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, k) = maxpool_surface(&self.members, x)?;
        self.members[k].gradient(x)
    }
}

/// Average pooling as a linear map: each group of row indices is replaced by
/// the uniform average of its rows. One output row per group.
pub fn avgpool_as_matrix(rows: &[Vec<f64>], groups: &[Vec<usize>]) -> Result<Vec<Vec<f64>>> {
    let width = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("cannot pool an empty matrix"))?;
    groups
        .iter()
        .map(|group| {
            if group.is_empty() {
                return Err(Error::invalid("pooling group is empty"));
            }
            let mut avg = vec![0.0; width];
            for &i in group {
                let row = rows.get(i).ok_or_else(|| {
                    Error::invalid(format!("row index {i} out of range ({} rows)", rows.len()))
                })?;
                for (a, v) in avg.iter_mut().zip(row) {
                    *a += v;
                }
            }
            let n = group.len() as f64;
            avg.iter_mut().for_each(|a| *a /= n);
            Ok(avg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defining_fn::{DefiningFunction, Linear};

    fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = a
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(b.iter().map(|x| x * x).sum::<f64>().sqrt())
            .max(1e-8);
        diff / scale
    }

    #[test]
    fn sigmoid_at_zero_is_half() {
        let m = MlpModel::perceptron(vec![0.6, 0.8, 0.0], Activation::Sigmoid).unwrap();
        assert_eq!(m.forward(&[0.8, -0.6]).unwrap(), 0.5);
        let g = m.grad_input(&[0.8, -0.6]).unwrap();
        assert!((g[0] - 0.25 * 0.6).abs() < 1e-15);
        assert!((g[1] - 0.25 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn relu_negative_side_is_zero() {
        let m = MlpModel::perceptron(vec![1.0, 0.0, 0.0], Activation::Relu).unwrap();
        assert_eq!(m.forward(&[-2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(m.forward(&[0.0, 3.0]).unwrap(), 0.0);
        assert_eq!(m.grad_input(&[0.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_perceptron_matches_linear() {
        let theta = vec![0.6, -0.8];
        let m = MlpModel::perceptron(vec![0.6, -0.8, 0.0], Activation::Identity).unwrap();
        let g = DefiningFunction::Linear(Linear::new(theta.clone(), false).unwrap());
        for x in [[1.0, 2.0], [-3.0, 0.5], [0.0, 0.0]] {
            assert_eq!(m.forward(&x).unwrap(), g.eval(&x).unwrap());
        }
        assert_eq!(m.grad_input(&[4.0, 5.0]).unwrap(), theta);
    }

    #[test]
    fn single_linear_node_param_grad_is_augmented_input() {
        let m = MlpModel::perceptron(vec![0.3, 0.2, -0.1], Activation::Identity).unwrap();
        let g = m.grad_params(&[2.0, -5.0], 1.0).unwrap();
        assert_eq!(g, vec![vec![2.0, -5.0, 1.0]]);
        let z = m.grad_params(&[2.0, -5.0], 0.0).unwrap();
        assert!(z[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let m =
            MlpModel::random(&[2, 3, 1], Activation::Tanh, Activation::Sigmoid, 0, false).unwrap();
        assert!(matches!(m.forward(&[1.0]), Err(Error::InvalidArgument(_))));
        let l1 = DenseLayer::new(vec![vec![1.0, 0.0, 0.0]; 3], Activation::Tanh).unwrap();
        let l2 = DenseLayer::new(vec![vec![1.0, 0.0, 0.0]], Activation::Tanh).unwrap();
        assert!(MlpModel::new(vec![l1, l2], false).is_err());
    }

    #[test]
    fn input_and_param_gradients_match_finite_differences() {
        let mut rng = seeded_rng(11);
        for trial in 0..100 {
            let act = if trial % 2 == 0 {
                Activation::Tanh
            } else {
                Activation::Sigmoid
            };
            let m =
                MlpModel::random(&[2, 6, 4, 1], act, Activation::Sigmoid, trial, false).unwrap();
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = m.grad_input(&x).unwrap();
            let fd = fd_grad(|p| m.forward(p).unwrap(), &x, 1e-6);
            assert!(rel_err(&g, &fd) < 1e-4, "trial {trial}: {g:?} vs {fd:?}");

            let analytic: Vec<f64> = m.grad_params(&x, 1.3).unwrap().concat();
            let params = m.params();
            let fd = fd_grad(
                |p| {
                    let mut mm = m.clone();
                    mm.set_params(p).unwrap();
                    1.3 * mm.forward(&x).unwrap()
                },
                &params,
                1e-6,
            );
            assert!(rel_err(&analytic, &fd) < 1e-4, "trial {trial}");
        }
    }

    #[test]
    fn random_row_normalized_rows_are_unit() {
        let m = MlpModel::random(
            &[2, 50, 100, 1],
            Activation::leaky_relu(0.01).unwrap(),
            Activation::Sigmoid,
            4,
            true,
        )
        .unwrap();
        assert!(m.max_row_norm_deviation() <= ROW_NORM_TOLERANCE);
        assert_eq!(m.widths(), vec![2, 50, 100, 1]);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m =
            MlpModel::random(&[2, 5, 1], Activation::Relu, Activation::Sigmoid, 1, true).unwrap();
        let back = MlpModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"row_normalized":true,"layers":[{"inputs":1,"outputs":1,
            "activation":{"kind":"sigmoid"},"weights":[[2.0,0.0]]}]}"#;
        assert!(MlpModel::from_json(bad).is_err());
    }

    #[test]
    fn activation_parsing() {
        assert_eq!(Activation::parse("tanh").unwrap(), Activation::Tanh);
        assert_eq!(
            Activation::parse("leaky_relu(0.2)").unwrap(),
            Activation::LeakyRelu { slope: 0.2 }
        );
        assert!(Activation::parse("leaky_relu(1.5)").is_err());
        assert!(Activation::parse("softplus").is_err());
    }

    #[test]
    fn inverses_round_trip() {
        for act in [
            Activation::Identity,
            Activation::Sigmoid,
            Activation::Tanh,
            Activation::LeakyRelu { slope: 0.1 },
        ] {
            for z in [-3.0, -0.2, 0.0, 0.7, 2.5] {
                let back = act.inverse(act.apply(z)).unwrap();
                assert!((back - z).abs() < 1e-12, "{act:?} {z}");
            }
        }
        assert_eq!(Activation::Relu.inverse(0.0), None);
    }

    #[test]
    fn maxpool_of_opposite_lines_is_abs() {
        let a = DefiningFunction::Linear(Linear::new(vec![0.6, 0.8], false).unwrap());
        let b = DefiningFunction::Linear(Linear::new(vec![-0.6, -0.8], false).unwrap());
        let members = [a.clone(), b];
        let mut rng = seeded_rng(5);
        for _ in 0..1000 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let (v, _) = maxpool_surface(&members, &x).unwrap();
            assert_eq!(v, a.eval(&x).unwrap().abs());
        }
        let (v, i) = maxpool_surface(&members[..1], &[1.0, 1.0]).unwrap();
        assert_eq!((v, i), (a.eval(&[1.0, 1.0]).unwrap(), 0));
        assert!(maxpool_surface::<DefiningFunction>(&[], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn maxpool_dominates_members_and_breaks_ties_low() {
        let members: Vec<MlpModel> = (0..4)
            .map(|s| {
                MlpModel::random(&[2, 1], Activation::Identity, Activation::Sigmoid, s, true)
                    .unwrap()
            })
            .collect();
        let mut rng = seeded_rng(6);
        for _ in 0..1000 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let (v, _) = maxpool_surface(&members, &x).unwrap();
            for m in &members {
                assert!(v >= m.forward(&x).unwrap());
            }
        }
        let same = [members[0].clone(), members[0].clone()];
        assert_eq!(maxpool_surface(&same, &[0.3, 0.1]).unwrap().1, 0);
    }

    #[test]
    fn avgpool_rows() {
        let rows = vec![
            vec![1.0, 2.0, 3.0],
            vec![1.0, 2.0, 3.0],
            vec![-1.0, 0.0, 5.0],
        ];
        assert_eq!(
            avgpool_as_matrix(&rows, &[vec![2]]).unwrap(),
            vec![rows[2].clone()]
        );
        assert_eq!(
            avgpool_as_matrix(&rows, &[vec![0, 1]]).unwrap(),
            vec![rows[0].clone()]
        );
        assert!(avgpool_as_matrix(&rows, &[vec![3]]).is_err());
        assert!(avgpool_as_matrix(&rows, &[vec![]]).is_err());
    }

    #[test]
    fn avgpooled_layer_averages_responses() {
        let layer = DenseLayer::new(
            vec![vec![0.2, -0.4, 0.1], vec![1.5, 0.3, -0.7]],
            Activation::Identity,
        )
        .unwrap();
        let pooled = layer.avg_pooled(&[vec![0, 1]]).unwrap();
        let x = [0.9, -1.7];
        let mut full = Vec::new();
        layer.preactivate(&x, &mut full);
        let mut avg = Vec::new();
        pooled.preactivate(&x, &mut avg);
        assert!((avg[0] - 0.5 * (full[0] + full[1])).abs() < 1e-15);
    }

    #[test]
    fn single_perceptron_level_sets_are_hyperplanes() {
        // With equal weights, swapping coordinates leaves theta . x bit-identical.
        let m = MlpModel::perceptron(vec![0.7, 0.7, 0.3], Activation::Tanh).unwrap();
        let mut rng = seeded_rng(8);
        for _ in 0..100 {
            let (p, q) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            assert_eq!(m.forward(&[p, q]).unwrap(), m.forward(&[q, p]).unwrap());
        }
    }
}
