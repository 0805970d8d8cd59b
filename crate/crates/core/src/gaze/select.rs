use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{cross_validate, stratified_kfold, TrainConfig};
use crate::stats::anova_f;

pub const SELECTION_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    /// Chosen column indices, ascending.
    pub indices: Vec<usize>,
    pub k: usize,
    /// Column indices ordered by decreasing F-score.
    pub ranking: Vec<usize>,
    pub f_scores: Vec<f64>,
    /// Mean cross-validated accuracy for each k tried, in grid order.
    pub accuracy_by_k: Vec<(usize, f64)>,
}

/// Columns ordered by decreasing one-way ANOVA F-score; equal scores keep
/// column order.
pub fn rank_features(x: &DMatrix<f64>, y: &[u8]) -> (Vec<usize>, Vec<f64>) {
    let scores: Vec<f64> = x
        .column_iter()
        .map(|c| {
            let f = anova_f(c.as_slice(), y);
            if f.is_nan() { 0.0 } else { f }
        })
        .collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    (order, scores)
}

/// For each k keep the top-k ranked columns and score a logistic regression
/// by stratified 5-fold accuracy; the best k wins, ties going to the smaller k.
pub fn select_k_best(x: &DMatrix<f64>, y: &[u8], k_grid: &[usize], seed: u64) -> Result<FeatureSelection> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if k_grid.is_empty() {
        return Err(Error::InvalidInput("empty k grid".into()));
    }
    if let Some(&k) = k_grid.iter().find(|&&k| k == 0 || k > x.ncols()) {
        return Err(Error::Range(format!("k = {k} must lie in 1..={}", x.ncols())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gaze feature matrix".into()));
    }
    let (ranking, f_scores) = rank_features(x, y);
    let folds = stratified_kfold(y, SELECTION_FOLDS, seed)?;
    let config = TrainConfig::logreg(1.0).with_seed(seed);
    let mut ks = k_grid.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut accuracy_by_k = Vec::with_capacity(ks.len());
    let mut best: Option<(usize, f64)> = None;
    for &k in &ks {
        let cols = &ranking[..k];
        let acc = cross_validate(&config, &x.select_columns(cols), y, &folds)?.mean.accuracy;
        accuracy_by_k.push((k, acc));
        if best.map_or(true, |(_, b)| acc > b) {
            best = Some((k, acc));
        }
    }
    let (k, _) = best.expect("non-empty grid");
    let mut indices = ranking[..k].to_vec();
    indices.sort_unstable();
    Ok(FeatureSelection {
        indices,
        k,
        ranking,
        f_scores,
        accuracy_by_k,
    })
}
