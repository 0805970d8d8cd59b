//! Dense feed-forward networks with hand-written backpropagation.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    /// Sigmoid unit(s) trained with binary cross-entropy.
    Sigmoid,
    /// Identity output trained with mean squared error.
    Linear,
}

/// One affine layer: `y = x W + b`, `W` is `inputs x outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DenseRepr", try_from = "DenseRepr")]
pub struct Dense {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Row-major on-disk form of a [`Dense`] layer.
#[derive(Serialize, Deserialize)]
struct DenseRepr {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl From<Dense> for DenseRepr {
    fn from(d: Dense) -> Self {
        let (inputs, outputs) = d.weights.shape();
        let mut weights = Vec::with_capacity(inputs * outputs);
        for r in 0..inputs {
            weights.extend(d.weights.row(r).iter());
        }
        DenseRepr {
            inputs,
            outputs,
            weights,
            bias: d.bias.iter().copied().collect(),
        }
    }
}

impl TryFrom<DenseRepr> for Dense {
    type Error = String;

    fn try_from(r: DenseRepr) -> std::result::Result<Self, String> {
        if r.weights.len() != r.inputs * r.outputs || r.bias.len() != r.outputs {
            return Err(format!("layer {}x{} has inconsistent parameter counts", r.inputs, r.outputs));
        }
        if r.weights.iter().chain(&r.bias).any(|v| !v.is_finite()) {
            return Err("non-finite layer parameter".into());
        }
        Ok(Dense {
            weights: DMatrix::from_row_slice(r.inputs, r.outputs, &r.weights),
            bias: DVector::from_vec(r.bias),
        })
    }
}

impl Dense {
    fn glorot(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            weights: DMatrix::from_fn(inputs, outputs, |_, _| rng.random_range(-limit..limit)),
            bias: DVector::zeros(outputs),
        }
    }

    fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = x * &self.weights;
        for (j, mut col) in a.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.bias[j]);
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub hidden: Activation,
    pub output: Output,
}

/// Gradient of the loss for every layer, aligned with [`Mlp::layers`].
pub type Gradients = Vec<(DMatrix<f64>, DVector<f64>)>;

impl Mlp {
    /// `sizes = [inputs, hidden.., outputs]`, Glorot-uniform weights, zero biases.
    pub fn new(sizes: &[usize], hidden: Activation, output: Output, rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        let layers = sizes.windows(2).map(|w| Dense::glorot(w[0], w[1], rng)).collect();
        Mlp { layers, hidden, output }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.weights.ncols()).unwrap_or(0)
    }

    /// Inference pass; sigmoid outputs are probabilities.
    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut a = layer.forward(&h);
            if l < last {
                a.apply(|v| *v = self.hidden.apply(*v));
            } else if self.output == Output::Sigmoid {
                a.apply(|v| *v = sigmoid(*v));
            }
            h = a;
        }
        h
    }

    /// Loss without dropout.
    pub fn loss(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        self.loss_and_gradient(x, y, None).0
    }

    /// Loss and full gradient. With `dropout = Some((rng, p))`, inverted dropout
    /// with drop probability `p` follows every hidden activation.
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>, y: &DMatrix<f64>, mut dropout: Option<(&mut Rng, f64)>) -> (f64, Gradients) {
        let last = self.layers.len() - 1;
        let mut inputs: Vec<DMatrix<f64>> = Vec::with_capacity(self.layers.len());
        let mut pre: Vec<DMatrix<f64>> = Vec::with_capacity(self.layers.len());
        let mut masks: Vec<Option<DMatrix<f64>>> = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let a = layer.forward(&h);
            inputs.push(h);
            if l < last {
                let mut act = a.map(|v| self.hidden.apply(v));
                let mask = match dropout.as_mut() {
                    Some((rng, p)) if *p > 0.0 => {
                        let keep = 1.0 / (1.0 - *p);
                        let m = DMatrix::from_fn(act.nrows(), act.ncols(), |_, _| {
                            if rng.random::<f64>() < *p {
                                0.0
                            } else {
                                keep
                            }
                        });
                        act.component_mul_assign(&m);
                        Some(m)
                    }
                    _ => None,
                };
                masks.push(mask);
                h = act;
            } else {
                masks.push(None);
                h = a.clone();
            }
            pre.push(a);
        }

        let logits = &pre[last];
        let n = x.nrows() as f64;
        let (loss, mut delta) = match self.output {
            Output::Sigmoid => {
                let mut loss = 0.0;
                let mut delta = DMatrix::<f64>::zeros(logits.nrows(), logits.ncols());
                for (i, (&z, &t)) in logits.iter().zip(y.iter()).enumerate() {
                    loss += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
                    delta[i] = (sigmoid(z) - t) / n;
                }
                (loss / n, delta)
            }
            Output::Linear => {
                let m = (logits.nrows() * logits.ncols()) as f64;
                let diff = logits - y;
                (diff.norm_squared() / m, diff * (2.0 / m))
            }
        };

        let mut grads: Gradients = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let gw = inputs[l].transpose() * &delta;
            let gb = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
            grads.push((gw, gb));
            if l > 0 {
                let mut dh = &delta * self.layers[l].weights.transpose();
                if let Some(m) = &masks[l - 1] {
                    dh.component_mul_assign(m);
                }
                let hidden = self.hidden;
                dh.zip_apply(&pre[l - 1], |g, a| *g *= hidden.derivative(a));
                delta = dh;
            }
        }
        grads.reverse();
        (loss, grads)
    }

    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(grads) {
            layer.weights.zip_apply(gw, |w, g| *w -= lr * g);
            layer.bias.axpy(-lr, gb, 1.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer: weights (column-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension {
                expected: self.num_params(),
                found: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = it.next().unwrap());
            l.bias.iter_mut().for_each(|b| *b = it.next().unwrap());
        }
        Ok(())
    }

    /// Flatten gradients in the same order as [`params`](Self::params).
    pub fn flatten(grads: &Gradients) -> Vec<f64> {
        grads
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
