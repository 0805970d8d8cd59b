use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Evaluation;
use crate::error::{Error, Result};
use crate::learn::{MeanMetrics, Metrics, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One (dataset, feature set, model) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub dataset: String,
    pub feature_set: String,
    pub model: ModelKind,
    pub status: RowStatus,
    pub reason: Option<String>,
    pub n_samples: usize,
    pub n_features: usize,
    pub best_config: Option<String>,
    /// Mean fold metrics of every grid candidate, `None` where it failed.
    pub candidates: Vec<Option<MeanMetrics>>,
    /// Per-fold metrics of the selected configuration.
    pub folds: Vec<Metrics>,
    pub mean: Option<MeanMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub cognates: usize,
    pub false_friends: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSummary {
    pub embedding: String,
    pub dictionary_entries: usize,
    pub entries_used: usize,
    pub orthogonality_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSummary {
    pub training_pairs: usize,
    pub input_dim: usize,
    /// Whether recorded pairs were predicted by models that did not see them.
    pub out_of_fold: bool,
    pub final_training_loss: f64,
    /// Over recorded pairs and selected features, in original units.
    pub mean_squared_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeSummary {
    pub fixations_dropped_short: usize,
    pub trials_extracted: usize,
    pub trials_excluded: usize,
    pub pairs_with_gaze: usize,
    pub selected_features: Vec<String>,
    pub regressor: Option<RegressorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub datasets: Vec<DatasetSummary>,
    pub alignments: Vec<AlignmentSummary>,
    pub gaze: Option<GazeSummary>,
    pub rows: Vec<EvalRow>,
    pub wall_time_seconds: f64,
}

impl EvalReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.status == RowStatus::Ok)
    }

    pub fn failed(&self) -> impl Iterator<Item = &EvalRow> {
        self.rows.iter().filter(|r| r.status == RowStatus::Failed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the wall-clock field zeroed; identical across reruns of the same config.
    pub fn deterministic_json(&self) -> Result<String> {
        EvalReport {
            wall_time_seconds: 0.0,
            ..self.clone()
        }
        .to_json()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeComparisonRow {
    pub pair_id: String,
    pub feature_name: String,
    pub gold: f64,
    pub predicted: f64,
}

pub const REPORT_CSV_HEADER: [&str; 12] = [
    "dataset",
    "feature_set",
    "model",
    "status",
    "best_config",
    "n_samples",
    "n_features",
    "precision",
    "recall",
    "f1",
    "accuracy",
    "reason",
];

pub const GAZE_COMPARISON_HEADER: [&str; 4] = ["pair_id", "feature_name", "gold", "predicted"];

fn csv_string(f: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    f(&mut w).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Header plus one line per cell.
pub fn report_csv(report: &EvalReport) -> Result<String> {
    csv_string(|w| {
        w.write_record(REPORT_CSV_HEADER)?;
        for r in &report.rows {
            let m = r.mean.unwrap_or_default();
            let metric = |v: f64| if r.mean.is_some() { v.to_string() } else { String::new() };
            w.write_record([
                r.dataset.clone(),
                r.feature_set.clone(),
                serde_json::to_value(r.model).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
                if r.status == RowStatus::Ok { "ok" } else { "failed" }.to_owned(),
                r.best_config.clone().unwrap_or_default(),
                r.n_samples.to_string(),
                r.n_features.to_string(),
                metric(m.precision),
                metric(m.recall),
                metric(m.f1),
                metric(m.accuracy),
                r.reason.clone().unwrap_or_default(),
            ])?;
        }
        Ok(())
    })
}

pub fn gaze_comparison_csv(rows: &[GazeComparisonRow]) -> Result<String> {
    csv_string(|w| {
        w.write_record(GAZE_COMPARISON_HEADER)?;
        for r in rows {
            w.write_record([r.pair_id.clone(), r.feature_name.clone(), r.gold.to_string(), r.predicted.to_string()])?;
        }
        Ok(())
    })
}

/// Write `report.json`, `report.csv` and, when gaze was configured,
/// `gaze_analysis.csv` and `gaze_comparison.csv` into `dir`.
pub fn write_outputs(eval: &Evaluation, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(path, e))
    };
    write("report.json", eval.report.to_json()?)?;
    write("report.csv", report_csv(&eval.report)?)?;
    if let Some(a) = &eval.gaze_analysis {
        write("gaze_analysis.csv", a.clone())?;
    }
    if !eval.gaze_comparison.is_empty() {
        write("gaze_comparison.csv", gaze_comparison_csv(&eval.gaze_comparison)?)?;
    }
    Ok(())
}
