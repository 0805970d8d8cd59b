use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use cognate::learn::{
    grid_search, predict, train, train_ffnn_classifier, train_gaze_regressor, train_linear_svm,
    train_logistic_regression, Activation, ModelKind, ModelParams, Objective, Prediction, Standardizer, TrainConfig,
    TrainedModel, TrainingHistory, MODEL_FORMAT_VERSION,
};
use cognate::rng;
use cognate::Error;

fn accuracy(m: &TrainedModel, x: &DMatrix<f64>, y: &[u8]) -> f64 {
    let p = m.predict_labels(x).unwrap();
    p.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

fn xor_replicated() -> (DMatrix<f64>, Vec<u8>) {
    let pts = [(0.0, 0.0, 0), (0.0, 1.0, 1), (1.0, 0.0, 1), (1.0, 1.0, 0)];
    let rows: Vec<(f64, f64, u8)> = (0..50).flat_map(|_| pts).collect();
    let x = DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { rows[i].0 } else { rows[i].1 });
    (x, rows.iter().map(|r| r.2).collect())
}

/// Two classes on either side of `x0 = 0` with a gap of `margin`, second coordinate free.
fn margin_blobs(n: usize, margin: f64, seed: u64) -> (DMatrix<f64>, Vec<u8>) {
    let mut r = rng::seeded(seed);
    let y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
    let x = DMatrix::from_fn(n, 2, |i, j| {
        if j == 0 {
            let side = if y[i] == 1 { 1.0 } else { -1.0 };
            side * (margin / 2.0 + r.random_range(0.0..2.0))
        } else {
            r.random_range(-3.0..3.0)
        }
    });
    (x, y)
}

#[test]
fn logreg_fits_one_dimensional_separable_data() {
    let x = DMatrix::from_fn(200, 1, |i, _| if i % 2 == 0 { -1.0 } else { 1.0 });
    let y: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
    let m = train_logistic_regression(&x, &y, &TrainConfig::logreg(1.0)).unwrap();
    assert_eq!(accuracy(&m, &x, &y), 1.0);
}

#[test]
fn zero_variance_feature_is_harmless() {
    let x = DMatrix::from_fn(100, 2, |i, j| if j == 0 { 3.0 } else { i as f64 - 49.5 });
    let y: Vec<u8> = (0..100).map(|i| u8::from(i >= 50)).collect();
    let s = Standardizer::fit(&x);
    assert!(s.transform(&x).column(0).iter().all(|&v| v == 0.0));
    for cfg in [TrainConfig::logreg(1.0), TrainConfig::linear_svm(1.0), TrainConfig::ffnn(8, Activation::Tanh)] {
        let m = train(&x, &y, &cfg).unwrap();
        assert!(m.scores(&x).unwrap().iter().all(|v| v.is_finite()), "{}", cfg.describe());
        assert_eq!(accuracy(&m, &x, &y), 1.0, "{}", cfg.describe());
    }
}

#[test]
fn svm_separates_margin_two_blobs_on_held_out_points() {
    let (xtr, ytr) = margin_blobs(200, 2.0, 1);
    let (xte, yte) = margin_blobs(200, 2.0, 2);
    let m = train_linear_svm(&xtr, &ytr, &TrainConfig::linear_svm(1.0)).unwrap();
    assert_eq!(accuracy(&m, &xte, &yte), 1.0);
}

#[test]
fn same_seed_gives_identical_weights() {
    let (x, y) = margin_blobs(120, 1.0, 3);
    for cfg in [
        TrainConfig::logreg(0.5),
        TrainConfig::linear_svm(2.0).with_seed(4),
        TrainConfig::ffnn(10, Activation::Sigmoid).with_seed(4),
    ] {
        let a = train(&x, &y, &cfg).unwrap();
        let b = train(&x, &y, &cfg).unwrap();
        assert_eq!(a.params, b.params, "{}", cfg.describe());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}

#[test]
fn ffnn_solves_xor_with_default_schedule() {
    let (x, y) = xor_replicated();
    let m = train_ffnn_classifier(&x, &y, &TrainConfig::ffnn(30, Activation::Tanh)).unwrap();
    let h = &m.history;
    assert_eq!(
        accuracy(&m, &x, &y),
        1.0,
        "stopped after {} epochs with {} halvings, validation loss {:?}",
        h.epochs,
        h.lr_halvings,
        h.validation_loss.last()
    );
}

#[test]
fn lr_schedule_halves_at_most_nine_times() {
    let mut r = rng::seeded(5);
    let x = DMatrix::from_fn(300, 3, |_, _| -> f64 { StandardNormal.sample(&mut r) });
    let y: Vec<u8> = (0..300).map(|_| u8::from(r.random::<bool>())).collect();
    for act in Activation::ALL {
        let mut cfg = TrainConfig::ffnn(30, act).with_seed(6);
        cfg.max_epochs = 20_000;
        let m = train_ffnn_classifier(&x, &y, &cfg).unwrap();
        let h = &m.history;
        assert!(h.lr_halvings <= 9, "{act:?}: {} halvings", h.lr_halvings);
        assert!(h.converged, "{act:?}: the schedule never reached the floor");
        assert!(h.final_lr < cfg.lr_floor && h.final_lr * 2.0 >= cfg.lr_floor);
        assert_eq!(h.final_lr, cfg.lr_initial / f64::powi(2.0, h.lr_halvings as i32));
    }
}

fn constant_model(bias: f64) -> TrainedModel {
    TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::Logreg,
        input_dim: 1,
        output_dim: 1,
        input_scaler: Standardizer::identity(1),
        target_scaler: None,
        params: ModelParams::Linear {
            weights: vec![0.0],
            bias,
        },
        config: TrainConfig::logreg(1.0),
        history: TrainingHistory::default(),
    }
}

#[test]
fn threshold_ties_go_to_the_positive_class() {
    let x = DMatrix::from_element(3, 1, 1.0);
    let m = constant_model(0.0);
    assert_eq!(m.scores(&x).unwrap(), vec![0.5; 3]);
    assert_eq!(m.predict_labels(&x).unwrap(), vec![1; 3]);
    // sigmoid(0.8473) ≈ 0.7
    assert_eq!(constant_model(0.8473).predict_labels(&x).unwrap(), vec![1; 3]);
    assert_eq!(constant_model(-0.01).predict_labels(&x).unwrap(), vec![0; 3]);
}

#[test]
fn prediction_rejects_wrong_width() {
    let m = constant_model(0.0);
    let err = m.predict_labels(&DMatrix::zeros(2, 3)).unwrap_err();
    assert!(matches!(err, Error::Dimension { expected: 1, found: 3 }));
}

#[test]
fn scaler_is_fitted_on_training_rows_only() {
    let (x, y) = margin_blobs(100, 1.0, 7);
    let m = train(&x, &y, &TrainConfig::logreg(1.0)).unwrap();
    assert_eq!(m.input_scaler, Standardizer::fit(&x));
    let shifted = x.map(|v| v + 100.0);
    let refit = train(&shifted, &y, &TrainConfig::logreg(1.0)).unwrap();
    assert_eq!(
        m.predict_labels(&x).unwrap(),
        refit.predict_labels(&shifted).unwrap()
    );
}

#[test]
fn grid_search_finds_the_planted_optimum() {
    let (x, y) = xor_replicated();
    let grid = vec![
        TrainConfig::logreg(1.0),
        TrainConfig::ffnn(30, Activation::Tanh),
        TrainConfig::linear_svm(1.0),
    ];
    let g = grid_search(&grid, &x, &y, 5, 1, Objective::WeightedF1).unwrap();
    assert_eq!(g.best_index, 1);
    assert_eq!(g.best.config.model_kind, ModelKind::FfnnClassifier);
    assert_eq!(g.best.mean.f1, 1.0);
    assert_eq!(g.candidates.len(), 3);
}

#[test]
fn grid_search_ties_keep_the_earliest_candidate() {
    let (x, y) = margin_blobs(100, 2.0, 8);
    let grid = vec![TrainConfig::logreg(1.0), TrainConfig::logreg(2.0), TrainConfig::logreg(1.0)];
    let g = grid_search(&grid, &x, &y, 5, 2, Objective::WeightedF1).unwrap();
    let scores: Vec<f64> = g.candidates.iter().map(|c| c.unwrap().f1).collect();
    assert!(scores.iter().all(|&s| s == scores[0]), "{scores:?}");
    assert_eq!(g.best_index, 0);

    let single = grid_search(&grid[1..2], &x, &y, 5, 2, Objective::Accuracy).unwrap();
    assert_eq!(single.best_index, 0);
    assert_eq!(single.best.config, grid[1]);
}

fn teacher(n: usize, d: usize, out: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut r = rng::seeded(seed);
    let mut g = |a: usize, b: usize| DMatrix::from_fn(a, b, |_, _| -> f64 { StandardNormal.sample(&mut r) });
    let a = g(d, out);
    let x = g(n, d);
    (x.clone(), &x * a)
}

#[test]
fn regressor_prediction_is_deterministic_and_eight_wide() {
    let (x, y) = teacher(200, 12, 8, 9);
    let mut cfg = TrainConfig::gaze_regressor(8).with_seed(3);
    cfg.max_epochs = 20;
    let m = train_gaze_regressor(&x, &y, &cfg).unwrap();
    let a = m.predict_values(&x).unwrap();
    let b = m.predict_values(&x).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.shape(), (200, 8));
    match predict(&m, &x).unwrap() {
        Prediction::Values(v) => assert_eq!(v, a),
        Prediction::Labels(_) => panic!("regressor returned labels"),
    }
    let again = train_gaze_regressor(&x, &y, &cfg).unwrap();
    assert_eq!(again, m);
}

#[test]
fn regressor_rejects_mismatched_targets() {
    let (x, y) = teacher(50, 4, 5, 10);
    let err = train_gaze_regressor(&x, &y, &TrainConfig::gaze_regressor(8)).unwrap_err();
    assert!(matches!(err, Error::Dimension { expected: 8, found: 5 }));
}

#[test]
fn invalid_configs_are_rejected() {
    let (x, y) = margin_blobs(40, 1.0, 11);
    let mut bad = TrainConfig::ffnn(10, Activation::Relu);
    bad.lr_floor = bad.lr_initial;
    assert!(train(&x, &y, &bad).is_err());
    let mut bad = TrainConfig::gaze_regressor(2);
    bad.dropout = 1.0;
    assert!(bad.validate().is_err());
}
