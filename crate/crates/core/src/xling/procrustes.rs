use std::fs;
use std::path::Path;

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::embeddings::EmbeddingTable;
use super::svd::jacobi_svd;
use crate::error::{Error, Result};

/// Row preprocessing applied to both dictionary matrices before alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignOptions {
    pub unit_normalize: bool,
    pub center: bool,
    pub renormalize: bool,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            unit_normalize: true,
            center: true,
            renormalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    matrix: DMatrix<f64>,
}

impl OrthogonalMap {
    pub fn identity(dim: usize) -> Self {
        OrthogonalMap {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Wrap `matrix`, rejecting it unless `max |W^T W - I| <= 1e-6`.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput("orthogonal map must be square".into()));
        }
        let map = OrthogonalMap { matrix };
        let err = map.orthogonality_error();
        if err > 1e-6 {
            return Err(Error::Numerical(format!("matrix is not orthogonal (error {err:e})")));
        }
        Ok(map)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `max |W^T W - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.dim();
        (self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(d, d))
            .abs()
            .max()
    }
}

/// Unit-normalise rows, mean-centre columns, unit-normalise again (each step optional).
pub fn preprocess_rows(m: &DMatrix<f64>, opts: &AlignOptions) -> DMatrix<f64> {
    let mut m = m.clone();
    if opts.unit_normalize {
        normalize_rows(&mut m);
    }
    if opts.center && m.nrows() > 0 {
        let mean = m.row_mean();
        for mut row in m.row_iter_mut() {
            row -= &mean;
        }
    }
    if opts.renormalize {
        normalize_rows(&mut m);
    }
    m
}

fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
}

/// Orthogonal `W` minimising `|X W - Z|_F` over the preprocessed rows:
/// `W = U V^T` for `X^T Z = U S V^T`.
pub fn procrustes_align(x: &DMatrix<f64>, z: &DMatrix<f64>, opts: &AlignOptions) -> Result<OrthogonalMap> {
    let (n, d) = x.shape();
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("alignment needs at least one row and one column".into()));
    }
    if z.shape() != x.shape() {
        return Err(Error::InvalidInput(format!(
            "dictionary matrices differ in shape: {:?} vs {:?}",
            x.shape(),
            z.shape()
        )));
    }
    if n < d {
        warn!("alignment dictionary has {n} entries for dimension {d}; the map is under-determined");
    }
    let xp = preprocess_rows(x, opts);
    let zp = preprocess_rows(z, opts);
    let svd = jacobi_svd(&(xp.transpose() * zp))?;
    OrthogonalMap::from_matrix(svd.u * svd.v.transpose())
}

/// Right-multiply every vector by `W`.
pub fn apply_mapping(table: &EmbeddingTable, map: &OrthogonalMap) -> Result<EmbeddingTable> {
    if table.dim() != map.dim() {
        return Err(Error::Dimension {
            expected: map.dim(),
            found: table.dim(),
        });
    }
    let w = map.matrix();
    let d = table.dim();
    Ok(table.map_rows(table.name(), |src, dst| {
        for (j, out) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..d {
                acc += src[i] * w[(i, j)];
            }
            *out = acc;
        }
    }))
}

/// Bilingual dictionary: `source_word<TAB>target_word` per line.
pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dictionary(&text, &path.display().to_string())
}

pub fn parse_dictionary(text: &str, file: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        match (fields.next(), fields.next()) {
            (Some(s), Some(t)) if !s.trim().is_empty() && !t.trim().is_empty() => {
                out.push((s.trim().to_owned(), t.trim().to_owned()))
            }
            _ => return Err(Error::parse(file, i + 1, "expected `source<TAB>target`")),
        }
    }
    Ok(out)
}

/// Stack the vectors of dictionary entries present in both tables.
/// Returns `(X, Z, entries_used)`.
pub fn dictionary_matrices(
    source: &EmbeddingTable,
    target: &EmbeddingTable,
    dictionary: &[(String, String)],
) -> Result<(DMatrix<f64>, DMatrix<f64>, usize)> {
    if source.dim() != target.dim() {
        return Err(Error::Dimension {
            expected: source.dim(),
            found: target.dim(),
        });
    }
    let found: Vec<(&[f64], &[f64])> = dictionary
        .iter()
        .filter_map(|(s, t)| Some((source.get(s)?, target.get(t)?)))
        .collect();
    let d = source.dim();
    let x = DMatrix::from_fn(found.len(), d, |i, j| found[i].0[j]);
    let z = DMatrix::from_fn(found.len(), d, |i, j| found[i].1[j]);
    Ok((x, z, found.len()))
}
