//! Orthographic similarity: Levenshtein distance, normalised edit distance,
//! q-gram distance, and weighted lexical similarity.
//!
//! All lengths and edits are counted in Unicode scalar values, so Devanagari
//! vowel signs, halant and nukta are characters in their own right.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_Q: usize = 2;
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Multiset of the length-`q` substrings of a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QGramProfile {
    q: usize,
    counts: BTreeMap<String, usize>,
}

impl QGramProfile {
    pub fn new(word: &str, q: usize) -> Result<Self> {
        if q < 1 {
            return Err(Error::Range(format!("q must be >= 1, got {q}")));
        }
        let chars: Vec<char> = word.chars().collect();
        let mut counts = BTreeMap::new();
        if chars.len() >= q {
            for w in chars.windows(q) {
                *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
            }
        }
        Ok(QGramProfile { q, counts })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn counts(&self) -> &BTreeMap<String, usize> {
        &self.counts
    }

    /// Number of q-grams, i.e. `max(len - q + 1, 0)`.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// L1 distance between the two count vectors.
    pub fn distance(&self, other: &QGramProfile) -> usize {
        let mut d = 0;
        for (g, &c) in &self.counts {
            d += c.abs_diff(other.counts.get(g).copied().unwrap_or(0));
        }
        for (g, &c) in &other.counts {
            if !self.counts.contains_key(g) {
                d += c;
            }
        }
        d
    }
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// Edit distance over the longer length. Two empty strings are identical (0).
pub fn ned(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / longest as f64
}

pub fn qgram_distance(a: &str, b: &str, q: usize) -> Result<usize> {
    Ok(QGramProfile::new(a, q)?.distance(&QGramProfile::new(b, q)?))
}

/// q-gram distance scaled by the total number of q-grams in both words.
pub fn normalized_qgram_distance(a: &str, b: &str, q: usize) -> Result<f64> {
    let pa = QGramProfile::new(a, q)?;
    let pb = QGramProfile::new(b, q)?;
    let total = pa.total() + pb.total();
    if total == 0 {
        return Ok(0.0);
    }
    Ok(pa.distance(&pb) as f64 / total as f64)
}

/// Weighted lexical similarity:
/// `alpha * (1 - ned) + (1 - alpha) * (1 - qgram / (|Pa| + |Pb|))`.
///
/// This convex combination is a reconstruction; the original measure is only
/// described as combining NED with q-gram distance.
pub fn wls(a: &str, b: &str, q: usize, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Range(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let qn = normalized_qgram_distance(a, b, q)?;
    Ok(alpha * (1.0 - ned(a, b)) + (1.0 - alpha) * (1.0 - qn))
}

#[derive(Debug, Clone, Serialize)]
pub struct LexicalScores {
    pub levenshtein: usize,
    pub ned: f64,
    pub qgram_distance: usize,
    pub wls: f64,
}

pub fn lexical_scores(a: &str, b: &str, q: usize, alpha: f64) -> Result<LexicalScores> {
    Ok(LexicalScores {
        levenshtein: levenshtein(a, b),
        ned: ned(a, b),
        qgram_distance: qgram_distance(a, b, q)?,
        wls: wls(a, b, q, alpha)?,
    })
}

/// Classifier block: `[1 - NED, WLS]`.
pub fn lexical_features(a: &str, b: &str, q: usize, alpha: f64) -> Result<[f64; 2]> {
    Ok([1.0 - ned(a, b), wls(a, b, q, alpha)?])
}
