use std::path::{Path, PathBuf};

use cognate::learn::ModelKind;
use cognate::pipeline::{evaluate, run_pipeline, ExperimentConfig, RowStatus, GAZE_COMPARISON_HEADER};
use cognate::Error;

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

fn toy_config(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(toy_dir().join("config.toml")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

#[test]
fn toy_run_completes_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    let report = run_pipeline(&cfg).unwrap();
    for r in report.failed() {
        eprintln!("{} {} {:?}: {:?}", r.dataset, r.feature_set, r.model, r.reason);
    }
    assert!(report.all_ok());
    assert_eq!(report.rows.len(), cfg.feature_sets.len() * cfg.datasets.len() * cfg.models.list.len());
    for r in &report.rows {
        assert_eq!(r.folds.len(), cfg.k);
        let m = r.mean.unwrap();
        assert!((0.0..=1.0).contains(&m.f1));
    }
    let gaze = report.gaze.as_ref().unwrap();
    assert_eq!(gaze.pairs_with_gaze, 10);
    let reg = gaze.regressor.as_ref().unwrap();
    assert!(reg.out_of_fold);
    assert_eq!(reg.input_dim, 32);
    assert_eq!(report.alignments.len(), 1);
    assert!(report.alignments[0].orthogonality_error <= 1e-6);

    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), report.rows.len() + 1);
    let cmp = std::fs::read_to_string(dir.path().join("gaze_comparison.csv")).unwrap();
    let mut lines = cmp.lines();
    assert_eq!(lines.next().unwrap(), GAZE_COMPARISON_HEADER.join(","));
    assert_eq!(lines.count(), 10 * gaze.selected_features.len());
    let analysis = std::fs::read_to_string(dir.path().join("gaze_analysis.csv")).unwrap();
    assert_eq!(analysis.lines().count(), 4);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), report.rows.len());
}

#[test]
fn reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config(dir.path());
    cfg.feature_sets = vec!["xlm+predicted_gaze".into(), "lexical".into()];
    cfg.models.list = vec![ModelKind::LinearSvm, ModelKind::FfnnClassifier];
    let a = evaluate(&cfg).unwrap();
    let b = evaluate(&cfg).unwrap();
    assert_eq!(a.report.deterministic_json().unwrap(), b.report.deterministic_json().unwrap());
    assert_eq!(a.gaze_comparison, b.gaze_comparison);
}

#[test]
fn missing_embedding_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config(dir.path());
    cfg.embeddings.get_mut("xlm").unwrap().source = dir.path().join("absent.vec");
    assert!(matches!(evaluate(&cfg), Err(Error::Config(_))));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn unknown_feature_block_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config(dir.path());
    cfg.feature_sets = vec!["xlm+colour".into()];
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    cfg.feature_sets = vec!["gaze+predicted_gaze".into()];
    assert!(cfg.validate().is_err());
}

#[test]
fn small_gaze_subset_marks_rows_failed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config(dir.path());
    cfg.k = 6;
    cfg.feature_sets = vec!["lexical".into()];
    cfg.gaze.as_mut().unwrap().select_k = None;
    cfg.gaze_regressor = None;
    let report = evaluate(&cfg).unwrap().report;
    assert!(!report.all_ok());
    assert!(report.failed().all(|r| r.status == RowStatus::Failed && r.reason.is_some()));
    assert!(report.rows.iter().any(|r| r.dataset == "d1+d2" && r.status == RowStatus::Ok));
}

#[test]
fn config_hash_is_location_independent() {
    let text = std::fs::read_to_string(toy_dir().join("config.toml")).unwrap();
    let a = ExperimentConfig::from_toml_str(&text, Path::new("/a")).unwrap();
    let b = ExperimentConfig::from_toml_str(&text, Path::new("/b")).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = ExperimentConfig::from_toml_str(&text.replace("seed = 13", "seed = 14"), Path::new("/a")).unwrap();
    assert_ne!(a.hash(), c.hash());
}
