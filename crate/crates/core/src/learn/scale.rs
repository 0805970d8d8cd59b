use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Per-column z-scoring fitted on training rows. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// `1 / std`, or 0 for zero-variance columns.
    pub inv_std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut inv_std = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(m);
            inv_std.push(if sd > 1e-12 * (1.0 + m.abs()) { 1.0 / sd } else { 0.0 });
        }
        Standardizer { mean, inv_std }
    }

    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            inv_std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = x.clone();
        for (j, mut col) in z.column_iter_mut().enumerate() {
            let (m, s) = (self.mean[j], self.inv_std[j]);
            col.apply(|v| *v = (*v - m) * s);
        }
        z
    }

    /// Undo [`transform`](Self::transform); zero-variance columns come back as their mean.
    pub fn inverse(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = z.clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let (m, s) = (self.mean[j], self.inv_std[j]);
            col.apply(|v| *v = if s > 0.0 { *v / s + m } else { m });
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_guard() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let s = Standardizer::fit(&x);
        let z = s.transform(&x);
        assert!(z.iter().all(|v| v.is_finite()));
        assert!(z.column(1).iter().all(|&v| v == 0.0));
        assert!((z.column(0).sum()).abs() < 1e-12);
        let back = s.inverse(&z);
        assert!((back - x).abs().max() < 1e-12);
    }
}
