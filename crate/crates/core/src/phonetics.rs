//! Character-level phonetic feature vectors for Devanagari.
//!
//! The table format is `codepoint<TAB>f1..fP` with a header row naming the
//! features. Codepoints are written `U+0905` or as the literal character.
//! A 38-feature Devanagari table is embedded as [`PhoneticTable::builtin`].

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::corpus::{ContextClues, LabeledPair};
use crate::error::{Error, Result};

const BUILTIN_TABLE: &str = include_str!("../data/phonetic_devanagari.tsv");

#[derive(Debug, Clone)]
pub struct PhoneticTable {
    feature_names: Vec<String>,
    rows: HashMap<char, Vec<f64>>,
}

impl PhoneticTable {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TABLE, "builtin").expect("embedded phonetic table is well formed")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(file, 1, "missing header row"))?;
        let feature_names: Vec<String> = header.split('\t').skip(1).map(|s| s.trim().to_owned()).collect();
        if feature_names.is_empty() {
            return Err(Error::parse(file, 1, "header names no features"));
        }
        let mut rows = HashMap::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != feature_names.len() + 1 {
                return Err(Error::parse(
                    file,
                    line_no,
                    format!("expected {} columns, found {}", feature_names.len() + 1, fields.len()),
                ));
            }
            let ch = parse_codepoint(fields[0].trim())
                .ok_or_else(|| Error::parse(file, line_no, format!("bad codepoint {:?}", fields[0])))?;
            let values = fields[1..]
                .iter()
                .map(|f| f.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::parse(file, line_no, "non-numeric feature value"))?;
            rows.entry(ch).or_insert(values);
        }
        Ok(PhoneticTable { feature_names, rows })
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn get(&self, ch: char) -> Option<&[f64]> {
        self.rows.get(&ch).map(Vec::as_slice)
    }
}

fn parse_codepoint(s: &str) -> Option<char> {
    if let Some(hex) = s.strip_prefix("U+").or_else(|| s.strip_prefix("u+")) {
        return u32::from_str_radix(hex, 16).ok().and_then(char::from_u32);
    }
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

/// A phonetic vector; `unknown` marks a zero vector produced because no
/// character of the input was in the table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhoneticVector {
    pub values: Vec<f64>,
    pub unknown: bool,
}

impl PhoneticVector {
    fn zero(dim: usize) -> Self {
        PhoneticVector {
            values: vec![0.0; dim],
            unknown: true,
        }
    }
}

pub fn char_phonetic_vector(ch: char, table: &PhoneticTable) -> PhoneticVector {
    match table.get(ch) {
        Some(v) => PhoneticVector {
            values: v.to_vec(),
            unknown: false,
        },
        None => PhoneticVector::zero(table.dim()),
    }
}

/// Mean over the characters of `text` present in the table; others are skipped.
pub fn avg_phonetic_vector(text: &str, table: &PhoneticTable) -> PhoneticVector {
    let mut sum = vec![0.0; table.dim()];
    let mut n = 0usize;
    for v in text.chars().filter_map(|c| table.get(c)) {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    if n == 0 {
        return PhoneticVector::zero(table.dim());
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    PhoneticVector {
        values: sum,
        unknown: false,
    }
}

/// Mean of per-token word vectors over the whitespace tokens of `text`.
/// Tokens with no known character do not contribute.
pub fn avg_context_phonetic_vector(text: &str, table: &PhoneticTable) -> PhoneticVector {
    let mut sum = vec![0.0; table.dim()];
    let mut n = 0usize;
    for tok in text.split_whitespace() {
        let v = avg_phonetic_vector(tok, table);
        if v.unknown {
            continue;
        }
        for (s, x) in sum.iter_mut().zip(&v.values) {
            *s += x;
        }
        n += 1;
    }
    if n == 0 {
        return PhoneticVector::zero(table.dim());
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    PhoneticVector {
        values: sum,
        unknown: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhoneticPairFeatures {
    pub pv_s: PhoneticVector,
    pub pv_t: PhoneticVector,
    pub pcv_s: PhoneticVector,
    pub pcv_t: PhoneticVector,
}

impl PhoneticPairFeatures {
    /// `[PV_S; PV_T; PCV_S; PCV_T]`, length `4P`.
    pub fn concat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pv_s.values.len() * 4);
        for v in [&self.pv_s, &self.pv_t, &self.pcv_s, &self.pcv_t] {
            out.extend_from_slice(&v.values);
        }
        out
    }
}

pub fn phonetic_pair_features(pair: &LabeledPair, clues: &ContextClues, table: &PhoneticTable) -> PhoneticPairFeatures {
    PhoneticPairFeatures {
        pv_s: avg_phonetic_vector(&pair.source_word, table),
        pv_t: avg_phonetic_vector(&pair.target_word, table),
        pcv_s: avg_context_phonetic_vector(&clues.source_text(), table),
        pcv_t: avg_context_phonetic_vector(&clues.target_text(), table),
    }
}
