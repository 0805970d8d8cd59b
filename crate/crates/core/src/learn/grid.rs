use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{mean_metrics, stratified_kfold, train, weighted_prf, FoldAssignment, MeanMetrics, Metrics, TrainConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    WeightedF1,
    Accuracy,
}

impl Objective {
    pub fn score(self, m: &MeanMetrics) -> f64 {
        match self {
            Objective::WeightedF1 => m.f1,
            Objective::Accuracy => m.accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub config: TrainConfig,
    pub folds: Vec<Metrics>,
    pub mean: MeanMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: CvResult,
    pub best_index: usize,
    /// One entry per candidate; `None` where training failed.
    pub candidates: Vec<Option<MeanMetrics>>,
}

/// Train on each fold's complement and score on the fold.
pub fn cross_validate(config: &TrainConfig, x: &DMatrix<f64>, y: &[u8], folds: &FoldAssignment) -> Result<CvResult> {
    if folds.fold_of.len() != y.len() || x.nrows() != y.len() {
        return Err(Error::Dimension {
            expected: y.len(),
            found: folds.fold_of.len().min(x.nrows()),
        });
    }
    let mut results = Vec::with_capacity(folds.k);
    for fold in 0..folds.k {
        let (train_idx, test_idx) = folds.split(fold);
        let y_train: Vec<u8> = train_idx.iter().map(|&i| y[i]).collect();
        let y_test: Vec<u8> = test_idx.iter().map(|&i| y[i]).collect();
        let model = train(&x.select_rows(&train_idx), &y_train, config)?;
        let pred = model.predict_labels(&x.select_rows(&test_idx))?;
        results.push(weighted_prf(&y_test, &pred)?);
    }
    let mean = mean_metrics(&results);
    Ok(CvResult {
        config: config.clone(),
        folds: results,
        mean,
    })
}

/// Pick the candidate with the best mean cross-validated score. Every
/// candidate sees the same folds; ties go to the earliest candidate and
/// candidates whose training fails are logged and skipped.
pub fn grid_search(
    grid: &[TrainConfig],
    x: &DMatrix<f64>,
    y: &[u8],
    k: usize,
    seed: u64,
    objective: Objective,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyper-parameter grid".into()));
    }
    let folds = stratified_kfold(y, k, seed)?;
    let mut best: Option<(usize, CvResult)> = None;
    let mut candidates = Vec::with_capacity(grid.len());
    for (i, config) in grid.iter().enumerate() {
        match cross_validate(config, x, y, &folds) {
            Ok(res) => {
                candidates.push(Some(res.mean));
                let better = best
                    .as_ref()
                    .map_or(true, |(_, b)| objective.score(&res.mean) > objective.score(&b.mean));
                if better {
                    best = Some((i, res));
                }
            }
            Err(e) => {
                warn!("skipping {}: {e}", config.describe());
                candidates.push(None);
            }
        }
    }
    let (best_index, best) = best.ok_or_else(|| Error::Numerical("every grid candidate failed to train".into()))?;
    Ok(GridSearchResult {
        best,
        best_index,
        candidates,
    })
}
