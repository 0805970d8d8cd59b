use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

/// Word vectors sharing one dimension. Rows are stored contiguously in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    name: String,
    dim: usize,
    words: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(name: &str, dim: usize) -> Self {
        EmbeddingTable {
            name: name.to_owned(),
            dim,
            words: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Insert a word; returns `false` (and keeps the old vector) for duplicates.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if self.index.contains_key(word) {
            return Ok(false);
        }
        self.index.insert(word.to_owned(), self.words.len());
        self.words.push(word.to_owned());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vector(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.words.iter().enumerate().map(|(i, w)| (w.as_str(), self.vector(i)))
    }

    pub(crate) fn map_rows(&self, name: &str, f: impl Fn(&[f64], &mut [f64])) -> EmbeddingTable {
        let mut data = vec![0.0; self.data.len()];
        for (src, dst) in self.data.chunks(self.dim.max(1)).zip(data.chunks_mut(self.dim.max(1))) {
            f(src, dst);
        }
        EmbeddingTable {
            name: name.to_owned(),
            dim: self.dim,
            words: self.words.clone(),
            data,
            index: self.index.clone(),
        }
    }
}

/// Load a word2vec-style text file (`N D` header, then `word v1 .. vD`).
/// Returns the table and the number of duplicate words skipped.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<(EmbeddingTable, usize)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_embeddings(&text, &path.display().to_string(), &name)
}

pub fn parse_embeddings(text: &str, file: &str, name: &str) -> Result<(EmbeddingTable, usize)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(file, 1, "missing `N D` header"))?;
    let header: Vec<&str> = header.split_whitespace().collect();
    let (n, dim) = match header.as_slice() {
        [n, d] => (
            n.parse::<usize>().map_err(|_| Error::parse(file, 1, "bad row count in header"))?,
            d.parse::<usize>().map_err(|_| Error::parse(file, 1, "bad dimension in header"))?,
        ),
        _ => return Err(Error::parse(file, 1, "header must be `N D`")),
    };
    if dim == 0 {
        return Err(Error::parse(file, 1, "dimension must be positive"));
    }
    let mut table = EmbeddingTable::new(name, dim);
    let mut rows = 0usize;
    let mut duplicates = 0usize;
    let mut vector = Vec::with_capacity(dim);
    for (i, line) in lines {
        let line_no = i + 1;
        rows += 1;
        if rows > n {
            return Err(Error::parse(file, line_no, format!("more rows than the {n} declared")));
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap_or_default();
        vector.clear();
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(file, line_no, format!("bad float {f:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(file, line_no, format!("non-finite value {f:?}")));
            }
            vector.push(v);
        }
        if vector.len() != dim {
            return Err(Error::parse(
                file,
                line_no,
                format!("expected {dim} values, found {}", vector.len()),
            ));
        }
        if !table.insert(word, &vector)? {
            duplicates += 1;
        }
    }
    if rows < n {
        warn!("{file}: header declares {n} rows, found {rows}");
    }
    if duplicates > 0 {
        warn!("{file}: {duplicates} duplicate words ignored (first occurrence kept)");
    }
    Ok((table, duplicates))
}

/// Serialise with nine significant digits per value.
pub fn write_embeddings(table: &EmbeddingTable, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", table.len(), table.dim())?;
    let mut line = String::new();
    for (word, v) in table.iter() {
        line.clear();
        line.push_str(word);
        for x in v {
            write!(line, " {x:.8e}").expect("writing to a String cannot fail");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_embeddings(table, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Exact lookup after trimming; absent words give a zero vector and `oov = true`.
pub fn lookup(table: &EmbeddingTable, word: &str) -> (Vec<f64>, bool) {
    match table.get(word.trim()) {
        Some(v) => (v.to_vec(), false),
        None => (vec![0.0; table.dim()], true),
    }
}

/// Mean over in-vocabulary whitespace tokens, with the fraction of tokens found.
pub fn avg_context_vector(table: &EmbeddingTable, text: &str) -> (Vec<f64>, f64) {
    let mut sum = vec![0.0; table.dim()];
    let (mut found, mut total) = (0usize, 0usize);
    for tok in text.split_whitespace() {
        total += 1;
        if let Some(v) = table.get(tok) {
            found += 1;
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
    }
    if found == 0 {
        return (vec![0.0; table.dim()], 0.0);
    }
    sum.iter_mut().for_each(|s| *s /= found as f64);
    (sum, found as f64 / total as f64)
}
