//! Feedforward meta-models with log-sigmoid hidden layers and a linear
//! output, trained by momentum mini-batch gradient descent on MSE.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Hidden layer widths of both meta-models.
pub const DEFAULT_HIDDEN: [usize; 3] = [30, 20, 10];

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error(
        "training diverged at epoch {epoch} (learning rate {learning_rate}): loss is not finite"
    )]
    Divergence { epoch: usize, learning_rate: f64 },
    #[error("R² is undefined: targets are constant")]
    UndefinedR2,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("model file format error: {0}")]
    Format(String),
    #[error("model integrity error: {0}")]
    Integrity(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SurrogateError {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SurrogateError::Divergence { .. } | SurrogateError::UndefinedR2
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LogSigmoid,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LogSigmoid => logsig(z),
            Activation::Linear => z,
        }
    }
}

#[inline]
pub fn logsig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One dense layer. `weights` is row-major `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    #[inline]
    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.biases);
        for (i, &a) in input.iter().enumerate() {
            let row = &self.weights[i * self.fan_out..(i + 1) * self.fan_out];
            for (o, w) in out.iter_mut().zip(row) {
                *o += a * w;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    input_names: Vec<String>,
    output_name: String,
    layers: Vec<Layer>,
    hidden_activation: Activation,
    output_activation: Activation,
}

impl MlpModel {
    /// All-zero model with the given layer widths (`[inputs, hidden.., 1]`).
    pub fn zeros(
        input_names: &[&str],
        output_name: &str,
        hidden_sizes: &[usize],
    ) -> Result<Self, SurrogateError> {
        if input_names.is_empty() {
            return Err(SurrogateError::Shape(
                "model needs at least one input".into(),
            ));
        }
        if hidden_sizes.is_empty() || hidden_sizes.contains(&0) {
            return Err(SurrogateError::Shape(
                "hidden layer sizes must be non-empty and positive".into(),
            ));
        }
        let mut sizes = vec![input_names.len()];
        sizes.extend_from_slice(hidden_sizes);
        sizes.push(1);
        Ok(Self {
            input_names: input_names.iter().map(|s| s.to_string()).collect(),
            output_name: output_name.to_string(),
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            hidden_activation: Activation::LogSigmoid,
            output_activation: Activation::Linear,
        })
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_name(&self) -> &str {
        &self.output_name
    }

    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].fan_in];
        sizes.extend(self.layers.iter().map(|l| l.fan_out));
        sizes
    }

    /// `(fan_in, fan_out)` of every weight matrix.
    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.fan_in, l.fan_out)).collect()
    }

    pub fn input_index(&self, name: &str) -> Result<usize, SurrogateError> {
        self.input_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| SurrogateError::UnknownVariable(name.to_string()))
    }

    /// Weight from unit `from` of layer `layer` to unit `to` of the next.
    pub fn weight(&self, layer: usize, from: usize, to: usize) -> f64 {
        let l = &self.layers[layer];
        l.weights[from * l.fan_out + to]
    }

    pub fn set_weight(&mut self, layer: usize, from: usize, to: usize, value: f64) {
        let l = &mut self.layers[layer];
        l.weights[from * l.fan_out + to] = value;
    }

    pub fn bias(&self, layer: usize, unit: usize) -> f64 {
        self.layers[layer].biases[unit]
    }

    pub fn set_bias(&mut self, layer: usize, unit: usize, value: f64) {
        self.layers[layer].biases[unit] = value;
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), SurrogateError> {
        if x.len() != self.n_inputs() {
            return Err(SurrogateError::Shape(format!(
                "expected {} inputs, got {}",
                self.n_inputs(),
                x.len()
            )));
        }
        Ok(())
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Prediction at a standardized input.
    pub fn forward(&self, x: &[f64]) -> Result<f64, SurrogateError> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    /// [`MlpModel::forward`] without the dimension check; panics on mismatch.
    pub fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            layer.affine(&a, &mut z);
            let act = self.activation(k);
            a.clear();
            a.extend(z.iter().map(|v| act.apply(*v)));
        }
        a[0]
    }

    /// Activations of every layer (input first).
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let mut z = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            layer.affine(acts.last().expect("non-empty"), &mut z);
            let act = self.activation(k);
            acts.push(z.iter().map(|v| act.apply(*v)).collect());
        }
        acts
    }

    /// Reverse-mode deltas: `deltas[k]` is ∂y/∂z for layer `k`'s pre-activations.
    fn backward(&self, acts: &[Vec<f64>], output_grad: f64) -> Vec<Vec<f64>> {
        let n = self.layers.len();
        let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); n];
        deltas[n - 1] = vec![output_grad];
        for k in (0..n - 1).rev() {
            let next = &self.layers[k + 1];
            let a = &acts[k + 1];
            let d_next = &deltas[k + 1];
            deltas[k] = (0..next.fan_in)
                .map(|i| {
                    let row = &next.weights[i * next.fan_out..(i + 1) * next.fan_out];
                    let g: f64 = row.iter().zip(d_next).map(|(w, d)| w * d).sum();
                    g * a[i] * (1.0 - a[i])
                })
                .collect();
        }
        deltas
    }

    /// Exact gradient of [`MlpModel::forward`] with respect to the input.
    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        self.check_input(x)?;
        Ok(self.input_gradient_unchecked(x))
    }

    pub fn input_gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let acts = self.forward_trace(x);
        let deltas = self.backward(&acts, 1.0);
        let first = &self.layers[0];
        (0..first.fan_in)
            .map(|i| {
                let row = &first.weights[i * first.fan_out..(i + 1) * first.fan_out];
                row.iter().zip(&deltas[0]).map(|(w, d)| w * d).sum()
            })
            .collect()
    }

    /// Predictions over standardized `(var_i, var_j)` grids on `[0, 1]`, every
    /// other input held at `fixed_value`. Cell `[a][b]` has `var_i` at
    /// `a / (resolution − 1)` and `var_j` at `b / (resolution − 1)`.
    pub fn response_surface_grid(
        &self,
        var_i: &str,
        var_j: &str,
        fixed_value: f64,
        resolution: usize,
    ) -> Result<Vec<Vec<f64>>, SurrogateError> {
        let i = self.input_index(var_i)?;
        let j = self.input_index(var_j)?;
        if i == j {
            return Err(SurrogateError::Shape("surface axes must differ".into()));
        }
        if resolution < 2 {
            return Err(SurrogateError::Shape(
                "resolution must be at least 2".into(),
            ));
        }
        let step = |k: usize| k as f64 / (resolution - 1) as f64;
        let mut x = vec![fixed_value; self.n_inputs()];
        Ok((0..resolution)
            .map(|a| {
                (0..resolution)
                    .map(|b| {
                        x[i] = step(a);
                        x[j] = step(b);
                        self.forward_unchecked(&x)
                    })
                    .collect()
            })
            .collect())
    }

    fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}

/// Seeded model with weights uniform in `±1/√fan_in` and zero biases.
pub fn init_model(
    input_names: &[&str],
    output_name: &str,
    hidden_sizes: &[usize],
    seed: u64,
) -> Result<MlpModel, SurrogateError> {
    init_model_scaled(input_names, output_name, hidden_sizes, seed, 1.0)
}

/// Seeded model with weights uniform in `±scale/√fan_in` and zero biases.
pub fn init_model_scaled(
    input_names: &[&str],
    output_name: &str,
    hidden_sizes: &[usize],
    seed: u64,
    scale: f64,
) -> Result<MlpModel, SurrogateError> {
    let mut model = MlpModel::zeros(input_names, output_name, hidden_sizes)?;
    let mut rng = rng::seeded(seed, 0);
    for layer in &mut model.layers {
        let bound = scale / (layer.fan_in as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.random_range(-bound..=bound);
        }
    }
    Ok(model)
}

/// Standardized input/target pairs in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Samples {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self, SurrogateError> {
        if inputs.len() != targets.len() {
            return Err(SurrogateError::Shape(format!(
                "{} input rows but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if let Some(first) = inputs.first() {
            if inputs.iter().any(|r| r.len() != first.len()) {
                return Err(SurrogateError::Shape("ragged input rows".into()));
            }
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn slice(&self, range: std::ops::Range<usize>) -> Samples {
        Samples {
            inputs: self.inputs[range.clone()].to_vec(),
            targets: self.targets[range].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Trailing (most recent) fraction of samples held out for validation.
    pub validation_fraction: f64,
    pub weight_init_scale: f64,
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3000,
            learning_rate: 0.1,
            momentum: 0.9,
            batch_size: 32,
            seed: 1,
            validation_fraction: 0.2,
            weight_init_scale: 2.0,
            early_stop_patience: 200,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        let bad = |m: &str| Err(SurrogateError::Config(m.to_string()));
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return bad("validation_fraction must lie in (0, 0.5)");
        }
        if !(self.weight_init_scale > 0.0) {
            return bad("weight_init_scale must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_mse: f64,
    pub validation_mse: f64,
    /// R² of the returned model on the held-out samples; `None` when the
    /// held-out targets are constant.
    pub validation_r2: Option<f64>,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub epochs_run: usize,
    pub best_epoch: usize,
}

fn mse(model: &MlpModel, data: &Samples) -> f64 {
    let sse: f64 = data
        .inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, t)| (model.forward_unchecked(x) - t).powi(2))
        .sum();
    sse / data.len() as f64
}

/// Trains a copy of `model` on `data`. The last `validation_fraction` of the
/// samples form the validation set; the parameters with the lowest
/// validation MSE seen (including the starting point) are returned.
pub fn train(
    model: &MlpModel,
    data: &Samples,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport), SurrogateError> {
    cfg.validate()?;
    if data.len() < crate::dataset::MIN_TRAINING_RECORDS {
        return Err(SurrogateError::Shape(format!(
            "training needs at least {} samples, got {}",
            crate::dataset::MIN_TRAINING_RECORDS,
            data.len()
        )));
    }
    if data.inputs[0].len() != model.n_inputs() {
        return Err(SurrogateError::Shape(format!(
            "samples have {} inputs, model expects {}",
            data.inputs[0].len(),
            model.n_inputs()
        )));
    }
    let n_val = ((data.len() as f64 * cfg.validation_fraction).round() as usize).max(1);
    let n_train = data.len() - n_val;
    let train_set = data.slice(0..n_train);
    let val_set = data.slice(n_train..data.len());

    let mut net = model.clone();
    let mut velocity: Vec<Layer> = net
        .layers
        .iter()
        .map(|l| Layer::zeros(l.fan_in, l.fan_out))
        .collect();
    let mut grads = velocity.clone();
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut rng = rng::seeded(cfg.seed, 1);

    let mut best = net.clone();
    let mut best_val = mse(&net, &val_set);
    let mut best_epoch = 0;
    let mut train_loss = Vec::new();
    let mut validation_loss = Vec::new();
    let diverged = |epoch| SurrogateError::Divergence {
        epoch,
        learning_rate: cfg.learning_rate,
    };
    if !best_val.is_finite() {
        return Err(diverged(0));
    }

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            for g in &mut grads {
                g.weights.iter_mut().for_each(|v| *v = 0.0);
                g.biases.iter_mut().for_each(|v| *v = 0.0);
            }
            let scale = 2.0 / batch.len() as f64;
            for &idx in batch {
                let acts = net.forward_trace(&train_set.inputs[idx]);
                let err = acts.last().expect("output")[0] - train_set.targets[idx];
                let deltas = net.backward(&acts, scale * err);
                for (k, g) in grads.iter_mut().enumerate() {
                    let a = &acts[k];
                    for (i, ai) in a.iter().enumerate() {
                        let row = &mut g.weights[i * g.fan_out..(i + 1) * g.fan_out];
                        for (gw, d) in row.iter_mut().zip(&deltas[k]) {
                            *gw += ai * d;
                        }
                    }
                    for (gb, d) in g.biases.iter_mut().zip(&deltas[k]) {
                        *gb += d;
                    }
                }
            }
            for ((layer, v), g) in net.layers.iter_mut().zip(&mut velocity).zip(&grads) {
                for ((w, vw), gw) in layer.weights.iter_mut().zip(&mut v.weights).zip(&g.weights) {
                    *vw = cfg.momentum * *vw - cfg.learning_rate * gw;
                    *w += *vw;
                }
                for ((b, vb), gb) in layer.biases.iter_mut().zip(&mut v.biases).zip(&g.biases) {
                    *vb = cfg.momentum * *vb - cfg.learning_rate * gb;
                    *b += *vb;
                }
            }
        }
        let tl = mse(&net, &train_set);
        let vl = mse(&net, &val_set);
        if !tl.is_finite() || !vl.is_finite() || !net.all_finite() {
            return Err(diverged(epoch));
        }
        train_loss.push(tl);
        validation_loss.push(vl);
        if vl < best_val {
            best_val = vl;
            best = net.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= cfg.early_stop_patience {
            break;
        }
    }

    let report = TrainReport {
        train_mse: mse(&best, &train_set),
        validation_mse: best_val,
        validation_r2: evaluate_r2(&best, &val_set).ok(),
        epochs_run: train_loss.len(),
        train_loss,
        validation_loss,
        best_epoch,
    };
    Ok((best, report))
}

/// Coefficient of determination `1 − SSE/SST` of `predictions` against `targets`.
pub fn r2_score(predictions: &[f64], targets: &[f64]) -> Result<f64, SurrogateError> {
    if predictions.len() != targets.len() || targets.len() < 2 {
        return Err(SurrogateError::Shape(
            "R² needs at least two prediction/target pairs".into(),
        ));
    }
    if targets.iter().all(|t| *t == targets[0]) {
        return Err(SurrogateError::UndefinedR2);
    }
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let sst: f64 = targets.iter().map(|t| (t - mean).powi(2)).sum();
    let sse: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum();
    Ok(1.0 - sse / sst)
}

pub fn evaluate_r2(model: &MlpModel, data: &Samples) -> Result<f64, SurrogateError> {
    let preds: Vec<f64> = data
        .inputs
        .iter()
        .map(|x| model.forward(x))
        .collect::<Result<_, _>>()?;
    r2_score(&preds, &data.targets)
}

/// On-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub input_names: Vec<String>,
    pub output_name: String,
    pub layer_sizes: Vec<usize>,
    /// Activation of each weight layer, input side first.
    pub activations: Vec<Activation>,
    /// Per layer, `fan_in` rows of `fan_out` weights.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    /// Free-form provenance record of the run that produced the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_by: Option<serde_json::Value>,
}

impl From<&MlpModel> for ModelFile {
    fn from(m: &MlpModel) -> Self {
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            input_names: m.input_names.clone(),
            output_name: m.output_name.clone(),
            layer_sizes: m.layer_sizes(),
            activations: (0..m.layers.len()).map(|k| m.activation(k)).collect(),
            weights: m
                .layers
                .iter()
                .map(|l| l.weights.chunks(l.fan_out).map(|r| r.to_vec()).collect())
                .collect(),
            biases: m.layers.iter().map(|l| l.biases.clone()).collect(),
            generated_by: None,
        }
    }
}

impl TryFrom<ModelFile> for MlpModel {
    type Error = SurrogateError;

    fn try_from(f: ModelFile) -> Result<Self, Self::Error> {
        let bad = |m: String| Err(SurrogateError::Integrity(m));
        if f.schema_version != MODEL_SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", f.schema_version));
        }
        let sizes = &f.layer_sizes;
        if sizes.len() < 3 || sizes.contains(&0) {
            return bad(format!(
                "layer_sizes {sizes:?} need inputs, ≥1 hidden layer and an output"
            ));
        }
        if sizes[0] != f.input_names.len() {
            return bad(format!(
                "{} input names for {} inputs",
                f.input_names.len(),
                sizes[0]
            ));
        }
        if *sizes.last().expect("checked") != 1 {
            return bad("output layer must have exactly one unit".into());
        }
        let n_layers = sizes.len() - 1;
        if f.weights.len() != n_layers
            || f.biases.len() != n_layers
            || f.activations.len() != n_layers
        {
            return bad(format!("expected {n_layers} weight layers"));
        }
        let hidden = f.activations[0];
        if f.activations[..n_layers - 1].iter().any(|a| *a != hidden) {
            return bad("hidden layers must share one activation".into());
        }
        let mut layers = Vec::with_capacity(n_layers);
        for k in 0..n_layers {
            let (fan_in, fan_out) = (sizes[k], sizes[k + 1]);
            let w = &f.weights[k];
            if w.len() != fan_in || w.iter().any(|r| r.len() != fan_out) {
                return bad(format!("layer {k} weights are not {fan_in}×{fan_out}"));
            }
            if f.biases[k].len() != fan_out {
                return bad(format!(
                    "layer {k} has {} biases, expected {fan_out}",
                    f.biases[k].len()
                ));
            }
            layers.push(Layer {
                fan_in,
                fan_out,
                weights: w.iter().flatten().copied().collect(),
                biases: f.biases[k].clone(),
            });
        }
        let model = MlpModel {
            input_names: f.input_names,
            output_name: f.output_name,
            layers,
            hidden_activation: hidden,
            output_activation: f.activations[n_layers - 1],
        };
        if !model.all_finite() {
            return bad("non-finite parameter".into());
        }
        Ok(model)
    }
}

pub fn model_to_json(m: &MlpModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from(m)).expect("model serializes")
}

/// As [`model_to_json`], with a provenance record embedded.
pub fn model_to_json_with(m: &MlpModel, generated_by: serde_json::Value) -> String {
    let mut file = ModelFile::from(m);
    file.generated_by = Some(generated_by);
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<MlpModel, SurrogateError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| SurrogateError::Format(e.to_string()))?;
    MlpModel::try_from(file)
}

pub fn save_model(m: &MlpModel, path: impl AsRef<Path>) -> Result<(), SurrogateError> {
    let path = path.as_ref();
    fs::write(path, model_to_json(m)).map_err(|source| SurrogateError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel, SurrogateError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SurrogateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    model_from_json(&text)
}
