//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// `a = u * diag(singular_values) * v^T`, singular values descending.
/// `u` is `m x k`, `v` is `n x k` with `k = min(m, n)`, both with orthonormal columns.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
    pub sweeps: usize,
}

pub fn jacobi_svd(a: &DMatrix<f64>) -> Result<Svd> {
    jacobi_svd_with(a, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS)
}

pub fn jacobi_svd_with(a: &DMatrix<f64>, tol: f64, max_sweeps: usize) -> Result<Svd> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidInput("SVD of an empty matrix".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("SVD input".into()));
    }
    if a.nrows() < a.ncols() {
        let t = jacobi_svd_with(&a.transpose(), tol, max_sweeps)?;
        return Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
            sweeps: t.sweeps,
        });
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut off = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (w.column(p), w.column(q));
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if gamma == 0.0 || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let conv = gamma.abs() / (alpha * beta).sqrt();
                off = off.max(conv);
                if conv < tol {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if off < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi SVD did not converge within {max_sweeps} sweeps"
        )));
    }

    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let max_sigma = norms[order[0]];
    let cutoff = max_sigma * f64::EPSILON * m as f64;

    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut vs = DMatrix::<f64>::zeros(n, n);
    let mut sigma = DVector::<f64>::zeros(n);
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        vs.set_column(k, &v.column(j));
        if norms[j] > cutoff && norms[j] > 0.0 {
            sigma[k] = norms[j];
            u.set_column(k, &(w.column(j) / norms[j]));
        } else {
            deficient.push(k);
        }
    }
    complete_basis(&mut u, &deficient);
    Ok(Svd {
        u,
        singular_values: sigma,
        v: vs,
        sweeps,
    })
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (xp, xq) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * xp - s * xq;
        m[(i, q)] = s * xp + c * xq;
    }
}

/// Fill the listed (zero) columns of `u` with unit vectors orthogonal to the rest.
fn complete_basis(u: &mut DMatrix<f64>, missing: &[usize]) {
    let m = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &k in missing {
        while candidate < m {
            let mut e = DVector::<f64>::zeros(m);
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt for stability
            for _ in 0..2 {
                for &j in &filled {
                    let proj = u.column(j).dot(&e);
                    e -= u.column(j) * proj;
                }
            }
            let norm = e.norm();
            if norm > 1e-8 {
                u.set_column(k, &(e / norm));
                filled.push(k);
                break;
            }
        }
    }
}
