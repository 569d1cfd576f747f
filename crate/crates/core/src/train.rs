//! Binary cross-entropy fitting by (mini-batch) gradient descent.
//!
//! Two model shapes are trainable: an [`MlpModel`] whose output activation is
//! the sigmoid, and a [`SigmoidHead`] wrapping any [`DefiningFunction`] as
//! `sigmoid(scale * g(x) + bias)`. With `normalize_rows` the parameters are
//! projected back onto their constraint set after every step: unit augmented
//! rows for an MLP, the unit sphere for the head's defining function.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{seeded_rng, LabeledDataset};
use crate::defining_fn::{DefiningFunction, Surface};
use crate::error::{check_dim, Error, Result};
use crate::nn::{sigmoid, Activation, MlpModel};

/// Predictions are clamped to `[EPS, 1 - EPS]` before taking logarithms.
pub const BCE_EPS: f64 = 1e-12;

/// Samples per work unit in the parallel gradient sum. Fixed so the summation
/// order, and hence the result, does not depend on the thread count.
const CHUNK: usize = 64;

pub fn bce_loss(pred: f64, label: f64) -> f64 {
    let p = pred.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

/// `d bce_loss / d pred` at the clamped prediction.
pub fn bce_grad(pred: f64, label: f64) -> f64 {
    let p = pred.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -label / p + (1.0 - label) / (1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    #[default]
    Bce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Mini-batch size; `None` for full-batch descent.
    pub batch: Option<usize>,
    pub normalize_rows: bool,
    /// Seeds the per-epoch shuffles of mini-batch training.
    pub seed: u64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 100,
            batch: None,
            normalize_rows: false,
            seed: 0,
            loss: Loss::Bce,
        }
    }
}

impl TrainConfig {
    /// `lr` may be zero (a no-op run); negative or non-finite rates are rejected.
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be >= 0, got {}",
                self.lr
            )));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if self.batch == Some(0) {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        Ok(())
    }
}

/// `sigmoid(scale * g(x) + bias)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidHead {
    pub g: DefiningFunction,
    pub scale: f64,
    pub bias: f64,
}

impl SigmoidHead {
    pub fn new(g: DefiningFunction) -> Self {
        Self {
            g,
            scale: 1.0,
            bias: 0.0,
        }
    }

    fn logit(&self, x: &[f64]) -> Result<f64> {
        Ok(self.scale * self.g.eval(x)? + self.bias)
    }
}

/// A trainable binary classifier with output in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Mlp { model: MlpModel },
    Head(SigmoidHead),
}

impl Classifier {
    pub fn input_dim(&self) -> usize {
        match self {
            Classifier::Mlp { model } => model.input_dim(),
            Classifier::Head(h) => h.g.dim(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Classifier::Mlp { model } => model.forward(x),
            Classifier::Head(h) => Ok(sigmoid(h.logit(x)?)),
        }
    }

    /// Predicted class: 1 when the output is at least 0.5.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        Ok(usize::from(self.predict(x)? >= 0.5))
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Classifier::Mlp { model } => model.params(),
            Classifier::Head(h) => {
                let mut p = h.g.params();
                p.extend([h.scale, h.bias]);
                p
            }
        }
    }

    /// Sets the parameters; with `project`, maps them back onto the
    /// constraint set (see module docs).
    pub fn set_params(&mut self, params: &[f64], project: bool) -> Result<()> {
        check_dim(self.params().len(), params.len())?;
        match self {
            Classifier::Mlp { model } => {
                model.set_params(params)?;
                if project {
                    model.normalize_rows();
                }
            }
            Classifier::Head(h) => {
                let n = params.len() - 2;
                if project {
                    h.g.set_params_projected(&params[..n])?;
                } else {
                    set_raw(&mut h.g, &params[..n])?;
                }
                h.scale = params[n];
                h.bias = params[n + 1];
            }
        }
        Ok(())
    }

    /// Gradient of the cross-entropy at one sample with respect to the
    /// parameters, added into `out`. Returns the prediction.
    ///
    /// For the sigmoid output the logit gradient is `p - y`, the exact
    /// derivative of the unclamped loss.
    fn accumulate_grad(&self, x: &[f64], y: f64, out: &mut [f64]) -> Result<f64> {
        match self {
            Classifier::Mlp { model } => {
                let trace = model.trace(x)?;
                let p = trace.output();
                model.backward(&trace, p - y, Some(out));
                Ok(p)
            }
            Classifier::Head(h) => {
                let gx = h.g.eval(x)?;
                let p = sigmoid(h.scale * gx + h.bias);
                let d = p - y;
                let gp = h.g.grad_params(x)?;
                let n = gp.len();
                for (o, g) in out[..n].iter_mut().zip(&gp) {
                    *o += d * h.scale * g;
                }
                out[n] += d * gx;
                out[n + 1] += d;
                Ok(p)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn set_raw(g: &mut DefiningFunction, params: &[f64]) -> Result<()> {
    match g {
        DefiningFunction::Mlp { model } => model.set_params(params),
        // The parametric families always live on the sphere; there is no
        // unconstrained update for them.
        other => other.set_params_projected(params),
    }
}

impl Surface for Classifier {
    fn input_dim(&self) -> usize {
        Classifier::input_dim(self)
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.predict(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Classifier::Mlp { model } => model.grad_input(x),
            Classifier::Head(h) => {
                let p = sigmoid(h.logit(x)?);
                let k = h.scale * p * (1.0 - p);
                Ok(h.g.grad_x(x)?.into_iter().map(|v| k * v).collect())
            }
        }
    }
}

/// Parses an architecture string.
///
/// - `W0-W1-...-1:hidden[:output]`: MLP with the given widths; the output
///   activation defaults to `sigmoid`.
/// - `linear`, `circular[:r]`, `poly:m`: a [`SigmoidHead`] over the family,
///   for 2-D inputs.
///
/// Random parameters are drawn from `seed`.
pub fn classifier_from_arch(arch: &str, seed: u64, normalize_rows: bool) -> Result<Classifier> {
    let parts: Vec<&str> = arch.trim().split(':').collect();
    let bad = || Error::invalid(format!("unrecognized architecture `{arch}`"));
    let mut rng = seeded_rng(seed);
    let mut unit = |n: usize| -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    };
    let head = |g: DefiningFunction| Ok(Classifier::Head(SigmoidHead::new(g)));
    match parts[0] {
        "linear" if parts.len() == 1 => head(DefiningFunction::Linear(
            crate::defining_fn::Linear::new(unit(2), true)?,
        )),
        "circular" if parts.len() <= 2 => {
            let r = match parts.get(1) {
                Some(s) => s.parse().map_err(|_| bad())?,
                None => crate::defining_fn::Circular::DEFAULT_RADIUS,
            };
            head(DefiningFunction::Circular(
                crate::defining_fn::Circular::new(unit(2), r, true)?,
            ))
        }
        "poly" if parts.len() == 2 => {
            let m: u32 = parts[1].parse().map_err(|_| bad())?;
            let n = crate::defining_fn::multi_index_count(2, m);
            head(DefiningFunction::HomogeneousPoly(
                crate::defining_fn::HomogeneousPoly::new(2, m, unit(n), true)?,
            ))
        }
        widths if widths.contains('-') && (2..=3).contains(&parts.len()) => {
            let widths: Vec<usize> = widths
                .split('-')
                .map(|w| w.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            let hidden = Activation::parse(parts[1])?;
            let output = match parts.get(2) {
                Some(tag) => Activation::parse(tag)?,
                None => Activation::Sigmoid,
            };
            let model = MlpModel::random(&widths, hidden, output, seed, normalize_rows)?;
            Ok(Classifier::Mlp { model })
        }
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// Mean loss and accuracy over the whole dataset.
pub fn evaluate(model: &Classifier, data: &LabeledDataset) -> Result<(f64, f64)> {
    let per_chunk: Vec<(f64, usize)> = data
        .points()
        .par_chunks(CHUNK)
        .zip(data.labels().par_chunks(CHUNK))
        .map(|(xs, ys)| {
            let mut loss = 0.0;
            let mut correct = 0;
            for (x, &y) in xs.iter().zip(ys) {
                let p = model.predict(x)?;
                loss += bce_loss(p, y as f64);
                correct += usize::from(usize::from(p >= 0.5) == y);
            }
            Ok((loss, correct))
        })
        .collect::<Result<_>>()?;
    let n = data.len() as f64;
    let (loss, correct) = per_chunk
        .into_iter()
        .fold((0.0, 0), |(l, c), (dl, dc)| (l + dl, c + dc));
    Ok((loss / n, correct as f64 / n))
}

fn batch_gradient(
    model: &Classifier,
    data: &LabeledDataset,
    idx: &[usize],
    n_params: usize,
) -> Result<Vec<f64>> {
    let partials: Vec<Vec<f64>> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = vec![0.0; n_params];
            for &i in chunk {
                model.accumulate_grad(&data.points()[i], data.labels()[i] as f64, &mut g)?;
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; n_params];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    let scale = 1.0 / idx.len() as f64;
    total.iter_mut().for_each(|v| *v *= scale);
    Ok(total)
}

/// Trains a copy of `model` and returns it with the per-epoch trace. Record 0
/// holds the initial loss; record `e` the loss after epoch `e`.
pub fn fit(
    model: &Classifier,
    data: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(Classifier, Vec<EpochRecord>)> {
    cfg.validate()?;
    check_dim(model.input_dim(), data.dim())?;
    if let Some(bad) = data.labels().iter().find(|&&y| y > 1) {
        return Err(Error::invalid(format!(
            "labels must be 0 or 1, found {bad}"
        )));
    }
    if let Classifier::Mlp { model: m } = model {
        if m.output_activation() != Activation::Sigmoid {
            return Err(Error::invalid(format!(
                "cross-entropy training needs a sigmoid output, model has {}",
                m.output_activation().name()
            )));
        }
    }

    let mut model = model.clone();
    if cfg.normalize_rows {
        let p = model.params();
        model.set_params(&p, true)?;
    }
    let n_params = model.params().len();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = cfg.batch.unwrap_or(data.len()).min(data.len());
    let mut rng = seeded_rng(cfg.seed);
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let (loss, accuracy) = evaluate(&model, data)?;
    trace.push(EpochRecord {
        epoch: 0,
        loss,
        accuracy,
    });

    for epoch in 1..=cfg.epochs {
        if batch < data.len() {
            order.shuffle(&mut rng);
        }
        for idx in order.chunks(batch) {
            if cfg.lr == 0.0 {
                continue;
            }
            let grad = batch_gradient(&model, data, idx, n_params)?;
            let mut params = model.params();
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= cfg.lr * g;
            }
            model.set_params(&params, cfg.normalize_rows)?;
        }
        let (loss, accuracy) = evaluate(&model, data)?;
        trace.push(EpochRecord {
            epoch,
            loss,
            accuracy,
        });
    }
    Ok((model, trace))
}

/// `epoch,loss,accuracy` rows with a header line.
pub fn trace_to_csv(trace: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,loss,accuracy\n");
    for r in trace {
        out.push_str(&format!("{},{},{}\n", r.epoch, r.loss, r.accuracy));
    }
    out
}

pub fn save_trace_csv(trace: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, trace_to_csv(trace)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{sample_gaussian, sample_halfmoon};
    use crate::defining_fn::Linear;

    #[test]
    fn bce_examples() {
        assert!((bce_loss(0.5, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(bce_loss(1.0 - BCE_EPS, 1.0) < 1e-11);
        assert!(bce_loss(0.0, 1.0).is_finite());
    }

    #[test]
    fn bce_grad_matches_finite_differences() {
        let h = 1e-7;
        for &p in &[0.05, 0.3, 0.5, 0.77, 0.95] {
            for y in [0.0, 1.0] {
                let fd = (bce_loss(p + h, y) - bce_loss(p - h, y)) / (2.0 * h);
                let an = bce_grad(p, y);
                assert!(
                    (fd - an).abs() <= 1e-6 * an.abs(),
                    "p={p} y={y}: {fd} vs {an}"
                );
            }
        }
    }

    fn separable() -> LabeledDataset {
        let a = sample_gaussian(200, &[-2.0, -1.0], 0.3, 11).unwrap();
        let b = sample_gaussian(200, &[2.0, 1.5], 0.3, 12).unwrap();
        let points: Vec<Vec<f64>> = a.points().iter().chain(b.points()).cloned().collect();
        let labels = (0..400).map(|i| usize::from(i >= 200)).collect();
        LabeledDataset::new(points, labels).unwrap()
    }

    #[test]
    fn separable_gaussians_reach_full_accuracy() {
        let data = separable();
        let start = Classifier::Head(SigmoidHead::new(DefiningFunction::Linear(
            Linear::new(vec![0.0, -1.0], false).unwrap(),
        )));
        let cfg = TrainConfig {
            lr: 0.5,
            epochs: 200,
            ..Default::default()
        };
        let (model, trace) = fit(&start, &data, &cfg).unwrap();
        assert_eq!(trace.last().unwrap().accuracy, 1.0);
        let (_, acc) = evaluate(&model, &data).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let data = sample_halfmoon(50, 0.1, 3).unwrap();
        let start = classifier_from_arch("2-5-1:tanh", 4, false).unwrap();
        let cfg = TrainConfig {
            lr: 0.0,
            epochs: 3,
            batch: Some(7),
            ..Default::default()
        };
        let (model, _) = fit(&start, &data, &cfg).unwrap();
        assert_eq!(model.params(), start.params());
    }

    #[test]
    fn training_is_deterministic() {
        let data = sample_halfmoon(120, 0.1, 5).unwrap();
        let start = classifier_from_arch("2-8-8-1:leaky_relu", 6, true).unwrap();
        let cfg = TrainConfig {
            lr: 0.05,
            epochs: 5,
            batch: Some(16),
            normalize_rows: true,
            seed: 9,
            ..Default::default()
        };
        let (a, ta) = fit(&start, &data, &cfg).unwrap();
        let (b, tb) = fit(&start, &data, &cfg).unwrap();
        assert_eq!(a.params(), b.params());
        assert_eq!(ta, tb);
    }

    #[test]
    fn projected_rows_stay_unit_norm() {
        let data = sample_halfmoon(100, 0.1, 1).unwrap();
        let start = classifier_from_arch("2-6-4-1:tanh", 2, false).unwrap();
        let mut cfg = TrainConfig {
            lr: 0.2,
            epochs: 1,
            batch: Some(10),
            normalize_rows: true,
            ..Default::default()
        };
        let mut model = start;
        for seed in 0..5 {
            cfg.seed = seed;
            model = fit(&model, &data, &cfg).unwrap().0;
            let Classifier::Mlp { model: m } = &model else {
                unreachable!()
            };
            assert!(m.max_row_norm_deviation() <= 1e-9);
        }
    }

    #[test]
    fn full_batch_loss_decreases_at_small_rate() {
        let data = sample_halfmoon(200, 0.1, 1).unwrap();
        let start = classifier_from_arch("2-10-1:tanh", 3, false).unwrap();
        let cfg = TrainConfig {
            lr: 1e-3,
            epochs: 10,
            ..Default::default()
        };
        let (_, trace) = fit(&start, &data, &cfg).unwrap();
        for w in trace.windows(2) {
            assert!(w[1].loss < w[0].loss, "{w:?}");
        }
    }

    #[test]
    fn head_gradient_matches_finite_differences() {
        let data = sample_halfmoon(10, 0.1, 8).unwrap();
        let model = classifier_from_arch("poly:3", 1, false).unwrap();
        let Classifier::Head(head) = &model else {
            unreachable!()
        };
        let mut params = model.params();
        params[3] = 0.7;
        params[5] = -0.2;
        let mut model = Classifier::Head(head.clone());
        model.set_params(&params, false).unwrap();
        // Finite differences only along the free coordinates: scale and bias.
        let n = params.len();
        let loss_at = |m: &Classifier| {
            data.points()
                .iter()
                .zip(data.labels())
                .map(|(x, &y)| bce_loss(m.predict(x).unwrap(), y as f64))
                .sum::<f64>()
        };
        let mut grad = vec![0.0; n];
        for (x, &y) in data.points().iter().zip(data.labels()) {
            model.accumulate_grad(x, y as f64, &mut grad).unwrap();
        }
        for k in [n - 2, n - 1] {
            let h = 1e-6;
            let mut up = params.clone();
            up[k] += h;
            let mut down = params.clone();
            down[k] -= h;
            let mut mu = model.clone();
            mu.set_params(&up, false).unwrap();
            let mut md = model.clone();
            md.set_params(&down, false).unwrap();
            let fd = (loss_at(&mu) - loss_at(&md)) / (2.0 * h);
            assert!(
                (fd - grad[k]).abs() <= 1e-4 * (1.0 + fd.abs()),
                "{fd} vs {}",
                grad[k]
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = sample_halfmoon(10, 0.1, 8).unwrap();
        let model = classifier_from_arch("linear", 1, false).unwrap();
        let cfg = TrainConfig::default();
        let three = LabeledDataset::new(data.points().to_vec(), vec![2; 10]).unwrap();
        assert!(fit(&model, &three, &cfg).is_err());
        assert!(fit(
            &model,
            &data,
            &TrainConfig {
                epochs: 0,
                ..cfg.clone()
            }
        )
        .is_err());
        let tanh_out = classifier_from_arch("2-3-1:tanh:tanh", 1, false).unwrap();
        assert!(fit(&tanh_out, &data, &cfg).is_err());
        for bad in ["", "2-3", "2-x-1:tanh", "poly", "circular:a", "cubic"] {
            assert!(classifier_from_arch(bad, 0, false).is_err(), "{bad}");
        }
    }

    #[test]
    fn classifier_json_round_trip() {
        for arch in ["2-4-1:relu", "linear", "circular:0.5", "poly:3"] {
            let c = classifier_from_arch(arch, 3, false).unwrap();
            assert_eq!(Classifier::from_json(&c.to_json().unwrap()).unwrap(), c);
        }
    }
}
