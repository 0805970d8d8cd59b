use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Indexed by label (0, 1).
    pub per_class: [ClassMetrics; 2],
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; 2]; 2],
}

/// Support-weighted precision, recall and F1 over labels {0, 1}; 0/0 is taken as 0.
pub fn weighted_prf(y_true: &[u8], y_pred: &[u8]) -> Result<Metrics> {
    if y_true.is_empty() {
        return Err(Error::InvalidInput("metrics over an empty sample".into()));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    let mut confusion = [[0usize; 2]; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t > 1 || p > 1 {
            return Err(Error::InvalidInput(format!("labels must be 0 or 1, got ({t}, {p})")));
        }
        confusion[t as usize][p as usize] += 1;
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let n = y_true.len() as f64;
    let mut per_class = [ClassMetrics::default(); 2];
    let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
    for c in 0..2 {
        let tp = confusion[c][c];
        let support = confusion[c][0] + confusion[c][1];
        let predicted = confusion[0][c] + confusion[1][c];
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class[c] = ClassMetrics { precision, recall, f1, support };
        let w = support as f64 / n;
        wp += w * precision;
        wr += w * recall;
        wf += w * f1;
    }
    Ok(Metrics {
        per_class,
        precision: wp,
        recall: wr,
        f1: wf,
        accuracy: (confusion[0][0] + confusion[1][1]) as f64 / n,
        confusion,
    })
}

/// Arithmetic mean of weighted P, R, F1 and accuracy over folds.
pub fn mean_metrics(folds: &[Metrics]) -> MeanMetrics {
    let n = folds.len().max(1) as f64;
    let sum = |f: fn(&Metrics) -> f64| folds.iter().map(f).sum::<f64>() / n;
    MeanMetrics {
        precision: sum(|m| m.precision),
        recall: sum(|m| m.recall),
        f1: sum(|m| m.f1),
        accuracy: sum(|m| m.accuracy),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect() {
        let m = weighted_prf(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_computed() {
        let m = weighted_prf(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap();
        assert_abs_diff_eq!(m.precision, 5.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.recall, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(m.f1, 11.0 / 15.0, epsilon = 1e-12);
        assert_eq!(m.confusion, [[2, 0], [1, 1]]);
    }

    #[test]
    fn all_zero_predictions() {
        let m = weighted_prf(&[1, 1, 0, 0], &[0, 0, 0, 0]).unwrap();
        assert_abs_diff_eq!(m.precision, 0.25);
        assert_abs_diff_eq!(m.recall, 0.5);
        assert_eq!(m.per_class[1].precision, 0.0);
        assert_eq!(m.per_class[1].recall, 0.0);
        assert_abs_diff_eq!(m.per_class[0].precision, 0.5);
        assert_eq!(m.per_class[0].recall, 1.0);
    }

    #[test]
    fn errors() {
        assert!(weighted_prf(&[], &[]).is_err());
        assert!(weighted_prf(&[1], &[1, 0]).is_err());
        assert!(weighted_prf(&[2], &[1]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn balanced_weighted_equals_macro(half in 1usize..30, preds in proptest::collection::vec(0u8..2, 60)) {
                let y_true: Vec<u8> = (0..2 * half).map(|i| u8::from(i >= half)).collect();
                let y_pred = &preds[..2 * half];
                let m = weighted_prf(&y_true, y_pred).unwrap();
                let macro_f1 = (m.per_class[0].f1 + m.per_class[1].f1) / 2.0;
                prop_assert!((m.f1 - macro_f1).abs() < 1e-12);
                for v in [m.precision, m.recall, m.f1, m.accuracy] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                let wf = m.per_class.iter().map(|c| c.support as f64 / y_true.len() as f64 * c.f1).sum::<f64>();
                prop_assert!((m.f1 - wf).abs() < 1e-12);
            }
        }
    }
}
