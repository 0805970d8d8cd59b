//! Classifiers, the gaze-feature regressor, cross-validation and metrics.
//!
//! Every trainer z-scores its inputs with statistics fitted on the rows it is
//! given and stores them in the returned [`TrainedModel`]; prediction applies
//! the same transform. Training is deterministic in `(data, config)`.

mod cv;
mod grid;
pub mod linear;
mod metrics;
pub mod mlp;
mod scale;

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use cv::{stratified_kfold, FoldAssignment};
pub use grid::{cross_validate, grid_search, CvResult, GridSearchResult, Objective};
pub use metrics::{mean_metrics, weighted_prf, ClassMetrics, MeanMetrics, Metrics};
pub use mlp::{Mlp, Output};
pub use scale::Standardizer;

use crate::error::{Error, Result};
use crate::rng;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logreg,
    LinearSvm,
    FfnnClassifier,
    GazeRegressor,
}

impl ModelKind {
    pub fn is_classifier(self) -> bool {
        self != ModelKind::GazeRegressor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Hardtanh,
    Sigmoid,
    Relu,
}

impl Activation {
    pub const ALL: [Activation; 4] = [Activation::Tanh, Activation::Hardtanh, Activation::Sigmoid, Activation::Relu];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Hardtanh => x.clamp(-1.0, 1.0),
            Activation::Sigmoid => mlp::sigmoid(x),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative with respect to the pre-activation `x`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::Hardtanh => f64::from(u8::from(x > -1.0 && x < 1.0)),
            Activation::Sigmoid => {
                let s = mlp::sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Relu => f64::from(u8::from(x > 0.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub model_kind: ModelKind,
    /// Regularisation trade-off for the linear models.
    pub c: f64,
    /// Hidden width of the FFNN classifier.
    pub hidden_dim: usize,
    /// Hidden widths of the gaze regressor.
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub lr_initial: f64,
    /// The FFNN classifier stops once its learning rate drops below this.
    pub lr_floor: f64,
    pub dropout: f64,
    pub max_epochs: usize,
    /// Mini-batch size of the gaze regressor.
    pub batch_size: usize,
    /// Share of the training rows held out for the FFNN learning-rate schedule.
    pub validation_fraction: f64,
    /// Gradient-norm stopping threshold for logistic regression.
    pub tolerance: f64,
    /// Expected number of regression targets.
    pub output_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::logreg(1.0)
    }
}

impl TrainConfig {
    pub fn logreg(c: f64) -> Self {
        TrainConfig {
            model_kind: ModelKind::Logreg,
            c,
            hidden_dim: 0,
            hidden_layers: Vec::new(),
            activation: Activation::Sigmoid,
            lr_initial: 1.0,
            lr_floor: 0.0,
            dropout: 0.0,
            max_epochs: 2000,
            batch_size: 0,
            validation_fraction: 0.0,
            tolerance: 1e-6,
            output_dim: 1,
            seed: 0,
        }
    }

    pub fn linear_svm(c: f64) -> Self {
        TrainConfig {
            model_kind: ModelKind::LinearSvm,
            max_epochs: 100,
            ..TrainConfig::logreg(c)
        }
    }

    pub fn ffnn(hidden_dim: usize, activation: Activation) -> Self {
        TrainConfig {
            model_kind: ModelKind::FfnnClassifier,
            c: 1.0,
            hidden_dim,
            activation,
            lr_initial: 0.4,
            lr_floor: 0.001,
            max_epochs: 500,
            validation_fraction: 0.1,
            ..TrainConfig::logreg(1.0)
        }
    }

    pub fn gaze_regressor(output_dim: usize) -> Self {
        TrainConfig {
            model_kind: ModelKind::GazeRegressor,
            c: 1.0,
            hidden_dim: 0,
            hidden_layers: vec![128, 64, 32],
            activation: Activation::Sigmoid,
            lr_initial: 0.1,
            lr_floor: 0.0,
            dropout: 0.2,
            max_epochs: 200,
            batch_size: 32,
            validation_fraction: 0.0,
            tolerance: 0.0,
            output_dim,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lr_floor < self.lr_initial) {
            return bad(format!("lr_floor {} must be below lr_initial {}", self.lr_floor, self.lr_initial));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} must lie in [0, 1)", self.dropout));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!("validation_fraction {} must lie in [0, 1)", self.validation_fraction));
        }
        match self.model_kind {
            ModelKind::Logreg | ModelKind::LinearSvm if !(self.c > 0.0 && self.c.is_finite()) => {
                bad(format!("C must be positive, got {}", self.c))
            }
            ModelKind::FfnnClassifier if self.hidden_dim == 0 => bad("hidden_dim must be positive".into()),
            ModelKind::GazeRegressor if self.hidden_layers.iter().any(|&h| h == 0) => {
                bad("hidden layer widths must be positive".into())
            }
            ModelKind::GazeRegressor if self.batch_size == 0 => bad("batch_size must be positive".into()),
            _ => Ok(()),
        }
    }

    /// Short human-readable description of the hyper-parameters that vary in grids.
    pub fn describe(&self) -> String {
        match self.model_kind {
            ModelKind::Logreg => format!("logreg(C={})", self.c),
            ModelKind::LinearSvm => format!("linear_svm(C={})", self.c),
            ModelKind::FfnnClassifier => format!("ffnn(hidden={}, activation={:?})", self.hidden_dim, self.activation).to_lowercase(),
            ModelKind::GazeRegressor => format!("gaze_regressor(hidden={:?})", self.hidden_layers),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: usize,
    /// Objective per epoch (training loss for the networks).
    pub objective: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub lr_halvings: usize,
    pub final_lr: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Linear { weights: Vec<f64>, bias: f64 },
    Network(Mlp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub input_dim: usize,
    pub output_dim: usize,
    pub input_scaler: Standardizer,
    pub target_scaler: Option<Standardizer>,
    pub params: ModelParams,
    pub config: TrainConfig,
    pub history: TrainingHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Labels(Vec<u8>),
    Values(DMatrix<f64>),
}

fn check_finite(x: &DMatrix<f64>, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_owned()))
    }
}

fn check_labels(x: &DMatrix<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("no training rows".into()));
    }
    if let Some(l) = y.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidInput(format!("labels must be 0 or 1, got {l}")));
    }
    check_finite(x, "training features")
}

/// Train the classifier named by `config.model_kind`.
pub fn train(x: &DMatrix<f64>, y: &[u8], config: &TrainConfig) -> Result<TrainedModel> {
    match config.model_kind {
        ModelKind::Logreg => train_logistic_regression(x, y, config),
        ModelKind::LinearSvm => train_linear_svm(x, y, config),
        ModelKind::FfnnClassifier => train_ffnn_classifier(x, y, config),
        ModelKind::GazeRegressor => Err(Error::Config("the gaze regressor is not a classifier".into())),
    }
}

fn linear_model(x: &DMatrix<f64>, y: &[u8], config: &TrainConfig, kind: ModelKind) -> Result<TrainedModel> {
    config.validate()?;
    check_labels(x, y)?;
    let scaler = Standardizer::fit(x);
    let z = scaler.transform(x);
    let (w, b, history) = match kind {
        ModelKind::Logreg => linear::fit_logistic(&z, y, config),
        _ => linear::fit_svm(&z, y, config),
    };
    if !(w.iter().all(|v| v.is_finite()) && b.is_finite()) {
        return Err(Error::Numerical("linear model parameters became non-finite".into()));
    }
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        input_dim: x.ncols(),
        output_dim: 1,
        input_scaler: scaler,
        target_scaler: None,
        params: ModelParams::Linear {
            weights: w.iter().copied().collect(),
            bias: b,
        },
        config: TrainConfig { model_kind: kind, ..config.clone() },
        history,
    })
}

/// L2-regularised logistic regression by full-batch gradient descent.
pub fn train_logistic_regression(x: &DMatrix<f64>, y: &[u8], config: &TrainConfig) -> Result<TrainedModel> {
    linear_model(x, y, config, ModelKind::Logreg)
}

/// Hinge-loss linear SVM by epoch-shuffled subgradient descent.
pub fn train_linear_svm(x: &DMatrix<f64>, y: &[u8], config: &TrainConfig) -> Result<TrainedModel> {
    linear_model(x, y, config, ModelKind::LinearSvm)
}

/// One-hidden-layer network with a sigmoid output and binary cross-entropy.
///
/// Full-batch gradient descent from `lr_initial`; the rate halves whenever
/// the held-out validation loss rises and training ends once it falls below
/// `lr_floor` (or after `max_epochs`). The validation rows are the last
/// `validation_fraction` of a seeded shuffle; with none available the
/// training loss drives the schedule instead.
pub fn train_ffnn_classifier(x: &DMatrix<f64>, y: &[u8], config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    check_labels(x, y)?;
    let scaler = Standardizer::fit(x);
    let z = scaler.transform(x);
    let mut rng = rng::seeded(config.seed);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.shuffle(&mut rng);
    let n_val = ((x.nrows() as f64) * config.validation_fraction).floor() as usize;
    let n_val = if x.nrows() - n_val < 1 { 0 } else { n_val };
    let (train_idx, val_idx) = order.split_at(x.nrows() - n_val);
    let targets = DMatrix::from_fn(x.nrows(), 1, |i, _| f64::from(y[i]));
    let xt = z.select_rows(train_idx);
    let yt = targets.select_rows(train_idx);
    let validation = (!val_idx.is_empty()).then(|| (z.select_rows(val_idx), targets.select_rows(val_idx)));

    let mut net = Mlp::new(&[x.ncols(), config.hidden_dim, 1], config.activation, Output::Sigmoid, &mut rng);
    let mut lr = config.lr_initial;
    let mut history = TrainingHistory::default();
    let mut previous = f64::INFINITY;
    for epoch in 0..config.max_epochs {
        let dropout = (config.dropout > 0.0).then_some((&mut rng, config.dropout));
        let (loss, grads) = net.loss_and_gradient(&xt, &yt, dropout);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        net.apply_gradients(&grads, lr);
        history.objective.push(loss);
        history.epochs = epoch + 1;
        let monitored = match &validation {
            Some((xv, yv)) => {
                let v = net.loss(xv, yv);
                history.validation_loss.push(v);
                v
            }
            None => net.loss(&xt, &yt),
        };
        if !monitored.is_finite() || !net.is_finite() {
            return Err(Error::Divergence { epoch, loss: monitored });
        }
        if monitored > previous {
            lr /= 2.0;
            history.lr_halvings += 1;
            if lr < config.lr_floor {
                history.converged = true;
                break;
            }
        }
        previous = monitored;
    }
    history.final_lr = lr;
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::FfnnClassifier,
        input_dim: x.ncols(),
        output_dim: 1,
        input_scaler: scaler,
        target_scaler: None,
        params: ModelParams::Network(net),
        config: config.clone(),
        history,
    })
}

/// Gaze-feature regressor: `inputs -> hidden_layers.. -> outputs`, sigmoid
/// activations each followed by inverted dropout while training, linear
/// output, mean squared error on z-scored targets, mini-batch SGD at a fixed rate.
pub fn train_gaze_regressor(x: &DMatrix<f64>, y: &DMatrix<f64>, config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    if y.ncols() != config.output_dim {
        return Err(Error::Dimension {
            expected: config.output_dim,
            found: y.ncols(),
        });
    }
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("no training rows".into()));
    }
    check_finite(x, "regressor inputs")?;
    check_finite(y, "regressor targets")?;
    let scaler = Standardizer::fit(x);
    let target_scaler = Standardizer::fit(y);
    let z = scaler.transform(x);
    let t = target_scaler.transform(y);
    let mut rng = rng::seeded(config.seed);
    let mut sizes = vec![x.ncols()];
    sizes.extend(&config.hidden_layers);
    sizes.push(y.ncols());
    let mut net = Mlp::new(&sizes, config.activation, Output::Linear, &mut rng);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut history = TrainingHistory::default();
    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = z.select_rows(batch);
            let yb = t.select_rows(batch);
            let dropout = (config.dropout > 0.0).then_some((&mut rng, config.dropout));
            let (loss, grads) = net.loss_and_gradient(&xb, &yb, dropout);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            net.apply_gradients(&grads, config.lr_initial);
            total += loss * batch.len() as f64;
        }
        history.objective.push(total / x.nrows() as f64);
        history.epochs = epoch + 1;
    }
    history.final_lr = config.lr_initial;
    if !net.is_finite() {
        return Err(Error::Numerical("regressor parameters became non-finite".into()));
    }
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::GazeRegressor,
        input_dim: x.ncols(),
        output_dim: y.ncols(),
        input_scaler: scaler,
        target_scaler: Some(target_scaler),
        params: ModelParams::Network(net),
        config: config.clone(),
        history,
    })
}

impl TrainedModel {
    fn standardized(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                found: x.ncols(),
            });
        }
        Ok(self.input_scaler.transform(x))
    }

    /// Classifier scores in `[0, 1]`: the sigmoid of the decision value.
    pub fn scores(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if !self.kind.is_classifier() {
            return Err(Error::Config("the gaze regressor has no class scores".into()));
        }
        let z = self.standardized(x)?;
        Ok(match &self.params {
            ModelParams::Linear { weights, bias } => {
                let w = DVector::from_column_slice(weights);
                (z * w).iter().map(|s| mlp::sigmoid(s + bias)).collect()
            }
            ModelParams::Network(net) => net.forward(&z).iter().copied().collect(),
        })
    }

    /// Labels by thresholding scores at 0.5 (ties go to label 1).
    pub fn predict_labels(&self, x: &DMatrix<f64>) -> Result<Vec<u8>> {
        Ok(self.scores(x)?.into_iter().map(|s| u8::from(s >= 0.5)).collect())
    }

    /// Regressor outputs in the original target units.
    pub fn predict_values(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (ModelParams::Network(net), Some(ts)) = (&self.params, &self.target_scaler) else {
            return Err(Error::Config("model is not a regressor".into()));
        };
        Ok(ts.inverse(&net.forward(&self.standardized(x)?)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub fn predict(model: &TrainedModel, x: &DMatrix<f64>) -> Result<Prediction> {
    if model.kind.is_classifier() {
        model.predict_labels(x).map(Prediction::Labels)
    } else {
        model.predict_values(x).map(Prediction::Values)
    }
}
