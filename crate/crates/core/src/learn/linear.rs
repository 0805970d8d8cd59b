//! L2-regularised linear classifiers on standardised features.
//!
//! Labels enter the objectives as `y ∈ {-1, +1}`. With `n` training rows the
//! regularisation strength is `lambda = 1 / (C n)`, which matches the usual
//! `C * sum(loss) + ||w||^2 / 2` scaling after dividing by `C n`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use super::{TrainConfig, TrainingHistory};
use crate::rng;

pub fn lambda_for(c: f64, n: usize) -> f64 {
    1.0 / (c * n.max(1) as f64)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss plus `lambda/2 |w|^2` (bias unregularised) and its gradient.
pub fn logistic_objective(w: &DVector<f64>, b: f64, x: &DMatrix<f64>, y: &[f64], lambda: f64) -> (f64, DVector<f64>, f64) {
    let n = x.nrows() as f64;
    let scores = x * w;
    let mut loss = 0.0;
    let mut residual = DVector::<f64>::zeros(x.nrows());
    for i in 0..x.nrows() {
        let m = y[i] * (scores[i] + b);
        loss += softplus(-m);
        residual[i] = -y[i] * sigmoid(-m) / n;
    }
    let grad_w = x.transpose() * &residual + w * lambda;
    let grad_b = residual.sum();
    (loss / n + 0.5 * lambda * w.norm_squared(), grad_w, grad_b)
}

/// Mean hinge loss plus `lambda/2 (|w|^2 + b^2)` and a subgradient.
pub fn hinge_objective(w: &DVector<f64>, b: f64, x: &DMatrix<f64>, y: &[f64], lambda: f64) -> (f64, DVector<f64>, f64) {
    let n = x.nrows() as f64;
    let scores = x * w;
    let mut loss = 0.0;
    let mut residual = DVector::<f64>::zeros(x.nrows());
    for i in 0..x.nrows() {
        let m = y[i] * (scores[i] + b);
        if m < 1.0 {
            loss += 1.0 - m;
            residual[i] = -y[i] / n;
        }
    }
    let grad_w = x.transpose() * &residual + w * lambda;
    let grad_b = residual.sum() + lambda * b;
    (loss / n + 0.5 * lambda * (w.norm_squared() + b * b), grad_w, grad_b)
}

pub(crate) fn signed(labels: &[u8]) -> Vec<f64> {
    labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect()
}

/// Full-batch gradient descent with the fixed step `1 / L`, where `L` bounds the
/// curvature of the objective, until `|grad| < tolerance` or `max_epochs`.
pub(crate) fn fit_logistic(x: &DMatrix<f64>, labels: &[u8], cfg: &TrainConfig) -> (DVector<f64>, f64, TrainingHistory) {
    let y = signed(labels);
    let n = x.nrows();
    let lambda = lambda_for(cfg.c, n);
    let mean_sq = x.row_iter().map(|r| r.norm_squared() + 1.0).sum::<f64>() / n.max(1) as f64;
    let step = 1.0 / (0.25 * mean_sq + lambda);
    let mut w = DVector::<f64>::zeros(x.ncols());
    let mut b = 0.0;
    let mut history = TrainingHistory::default();
    for epoch in 0..cfg.max_epochs {
        let (obj, gw, gb) = logistic_objective(&w, b, x, &y, lambda);
        history.objective.push(obj);
        history.epochs = epoch + 1;
        let gnorm = (gw.norm_squared() + gb * gb).sqrt();
        if gnorm < cfg.tolerance {
            history.converged = true;
            break;
        }
        w -= gw * step;
        b -= gb * step;
    }
    history.final_lr = step;
    (w, b, history)
}

/// Epoch-shuffled Pegasos subgradient descent with step `1 / (lambda t)` and
/// projection onto the ball of radius `1 / sqrt(lambda)`. The iterate with the
/// lowest full objective seen at an epoch boundary is kept, so the recorded
/// objective history is non-increasing.
pub(crate) fn fit_svm(x: &DMatrix<f64>, labels: &[u8], cfg: &TrainConfig) -> (DVector<f64>, f64, TrainingHistory) {
    let y = signed(labels);
    let (n, d) = x.shape();
    let lambda = lambda_for(cfg.c, n);
    let radius = 1.0 / lambda.sqrt();
    let rows = x.transpose();
    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = DVector::<f64>::zeros(d);
    let mut b = 0.0;
    let (mut best_obj, _, _) = hinge_objective(&w, b, x, &y, lambda);
    let (mut best_w, mut best_b) = (w.clone(), b);
    let mut history = TrainingHistory::default();
    let mut t = 0usize;
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let xi = rows.column(i);
            let margin = y[i] * (xi.dot(&w) + b);
            let shrink = 1.0 - 1.0 / t as f64;
            w *= shrink;
            b *= shrink;
            if margin < 1.0 {
                w.axpy(eta * y[i], &xi, 1.0);
                b += eta * y[i];
            }
            let norm = (w.norm_squared() + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w *= s;
                b *= s;
            }
        }
        let (obj, _, _) = hinge_objective(&w, b, x, &y, lambda);
        if obj < best_obj {
            best_obj = obj;
            best_w.copy_from(&w);
            best_b = b;
        }
        history.objective.push(best_obj);
        history.epochs = epoch + 1;
    }
    history.final_lr = 1.0 / (lambda * t.max(1) as f64);
    (best_w, best_b, history)
}
