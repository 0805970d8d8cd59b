use serde::Serialize;

use super::embeddings::{avg_context_vector, lookup, EmbeddingTable};
use crate::corpus::{ContextClues, LabeledPair};
use crate::error::{Error, Result};

/// `[WV_S; WV_T; CV_S; CV_T]` for one pair.
///
/// `oov_flags` are, in order: source word missing, target word missing,
/// no source context token found, no target context token found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFeatureVector {
    pub wv_s: Vec<f64>,
    pub wv_t: Vec<f64>,
    pub cv_s: Vec<f64>,
    pub cv_t: Vec<f64>,
    pub oov_flags: [bool; 4],
}

impl PairFeatureVector {
    pub fn concat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.wv_s.len() * 4);
        for v in [&self.wv_s, &self.wv_t, &self.cv_s, &self.cv_t] {
            out.extend_from_slice(v);
        }
        out
    }

    /// The concatenation followed by the four flags as 0/1.
    pub fn concat_with_flags(&self) -> Vec<f64> {
        let mut out = self.concat();
        out.extend(self.oov_flags.iter().map(|&f| f64::from(u8::from(f))));
        out
    }
}

pub fn pair_feature_vector(
    table_s: &EmbeddingTable,
    table_t: &EmbeddingTable,
    pair: &LabeledPair,
    clues: &ContextClues,
) -> Result<PairFeatureVector> {
    if table_s.dim() != table_t.dim() {
        return Err(Error::Dimension {
            expected: table_s.dim(),
            found: table_t.dim(),
        });
    }
    let (wv_s, oov_s) = lookup(table_s, &pair.source_word);
    let (wv_t, oov_t) = lookup(table_t, &pair.target_word);
    let (cv_s, cov_s) = avg_context_vector(table_s, &clues.source_text());
    let (cv_t, cov_t) = avg_context_vector(table_t, &clues.target_text());
    Ok(PairFeatureVector {
        wv_s,
        wv_t,
        cv_s,
        cv_t,
        oov_flags: [oov_s, oov_t, cov_s == 0.0, cov_t == 0.0],
    })
}
