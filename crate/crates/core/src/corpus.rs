//! Cognate / false-friend pair datasets.
//!
//! Pairs file: UTF-8 TSV `source<TAB>target<TAB>synset_id<TAB>label`, one pair
//! per line (columns remappable with [`ColumnSpec`]). Blank lines and lines
//! starting with `#` are skipped, as is a leading header whose first field is
//! `source`.
//!
//! Wordnet file: `synset_id<TAB>gloss_src<TAB>example_src<TAB>gloss_tgt<TAB>example_tgt`.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use log::warn;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    FalseFriend = 0,
    Cognate = 1,
}

impl Label {
    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::FalseFriend),
            1 => Some(Label::Cognate),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub source_word: String,
    pub target_word: String,
    pub synset_id: u64,
    pub label: Label,
}

impl LabeledPair {
    pub fn new(source: &str, target: &str, synset_id: u64, label: Label) -> Result<Self> {
        let (source, target) = (source.trim(), target.trim());
        if source.is_empty() || target.is_empty() {
            return Err(Error::InvalidInput("pair words must be non-empty".into()));
        }
        Ok(LabeledPair {
            source_word: source.to_owned(),
            target_word: target.to_owned(),
            synset_id,
            label,
        })
    }

    /// Stable identifier `synset:source:target`.
    pub fn key(&self) -> String {
        format!("{}:{}:{}", self.synset_id, self.source_word, self.target_word)
    }
}

/// Gloss and example sentence for each side of a pair. Any field may be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextClues {
    pub gloss_source: String,
    pub example_source: String,
    pub gloss_target: String,
    pub example_target: String,
}

impl ContextClues {
    pub fn source_text(&self) -> String {
        join_clues(&self.gloss_source, &self.example_source)
    }

    pub fn target_text(&self) -> String {
        join_clues(&self.gloss_target, &self.example_target)
    }

    pub fn is_empty(&self) -> bool {
        self.gloss_source.is_empty()
            && self.example_source.is_empty()
            && self.gloss_target.is_empty()
            && self.example_target.is_empty()
    }

    /// True when any of the four fields is empty.
    pub fn has_missing_field(&self) -> bool {
        self.gloss_source.is_empty()
            || self.example_source.is_empty()
            || self.gloss_target.is_empty()
            || self.example_target.is_empty()
    }
}

fn join_clues(gloss: &str, example: &str) -> String {
    match (gloss.is_empty(), example.is_empty()) {
        (true, true) => String::new(),
        (false, true) => gloss.to_owned(),
        (true, false) => example.to_owned(),
        (false, false) => format!("{gloss} {example}"),
    }
}

static EMPTY_CLUES: ContextClues = ContextClues {
    gloss_source: String::new(),
    example_source: String::new(),
    gloss_target: String::new(),
    example_target: String::new(),
};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub name: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub cognates: usize,
    pub false_friends: usize,
}

impl ClassCounts {
    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Cognate => self.cognates,
            Label::FalseFriend => self.false_friends,
        }
    }

    pub fn total(&self) -> usize {
        self.cognates + self.false_friends
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub pairs: Vec<LabeledPair>,
    pub context: BTreeMap<u64, ContextClues>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn from_pairs(name: &str, pairs: Vec<LabeledPair>) -> Self {
        Dataset {
            pairs,
            context: BTreeMap::new(),
            provenance: Provenance {
                name: name.to_owned(),
                seed: None,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn counts(&self) -> ClassCounts {
        let cognates = self.pairs.iter().filter(|p| p.label == Label::Cognate).count();
        ClassCounts {
            cognates,
            false_friends: self.pairs.len() - cognates,
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        self.pairs.iter().map(|p| p.label).collect()
    }

    /// Clues attached to the pair's synset, or an empty set when none were found.
    pub fn clues_for(&self, pair: &LabeledPair) -> &ContextClues {
        self.context.get(&pair.synset_id).unwrap_or(&EMPTY_CLUES)
    }

    /// Pairs satisfying `keep`, in order, with their context.
    pub fn subset(&self, name: &str, keep: impl Fn(&LabeledPair) -> bool) -> Dataset {
        let mask: Vec<bool> = self.pairs.iter().map(keep).collect();
        self.select(&mask, name.to_owned(), self.provenance.seed)
    }

    fn indices_of(&self, label: Label) -> Vec<usize> {
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    fn select(&self, keep: &[bool], name: String, seed: Option<u64>) -> Dataset {
        let pairs: Vec<LabeledPair> = self
            .pairs
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(p, _)| p.clone())
            .collect();
        let synsets: HashSet<u64> = pairs.iter().map(|p| p.synset_id).collect();
        let context = self
            .context
            .iter()
            .filter(|(id, _)| synsets.contains(id))
            .map(|(id, c)| (*id, c.clone()))
            .collect();
        Dataset {
            pairs,
            context,
            provenance: Provenance { name, seed },
        }
    }
}

/// Zero-based column positions within a pairs file row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub source: usize,
    pub target: usize,
    pub synset_id: usize,
    pub label: usize,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec {
            source: 0,
            target: 1,
            synset_id: 2,
            label: 3,
        }
    }
}

impl ColumnSpec {
    fn width(&self) -> usize {
        1 + self.source.max(self.target).max(self.synset_id).max(self.label)
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn load_cognate_pairs(path: impl AsRef<Path>, format: &ColumnSpec) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_cognate_pairs(&text, &path.display().to_string(), &name, format)
}

pub fn parse_cognate_pairs(text: &str, file: &str, name: &str, format: &ColumnSpec) -> Result<Dataset> {
    let mut pairs = Vec::new();
    let mut first = true;
    for (line, row) in data_lines(text) {
        let fields: Vec<&str> = row.split('\t').collect();
        if first {
            first = false;
            if fields[0].trim().eq_ignore_ascii_case("source") {
                continue;
            }
        }
        if fields.len() < format.width() {
            return Err(Error::parse(
                file,
                line,
                format!("expected {} columns, found {}", format.width(), fields.len()),
            ));
        }
        let synset_id: u64 = fields[format.synset_id]
            .trim()
            .parse()
            .map_err(|_| Error::parse(file, line, format!("synset_id {:?} is not a non-negative integer", fields[format.synset_id])))?;
        let label = fields[format.label]
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(Label::from_u8)
            .ok_or_else(|| Error::parse(file, line, format!("label {:?} is not 0 or 1", fields[format.label])))?;
        let pair = LabeledPair::new(fields[format.source], fields[format.target], synset_id, label)
            .map_err(|e| Error::parse(file, line, e.to_string()))?;
        pairs.push(pair);
    }
    Ok(Dataset::from_pairs(name, pairs))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextReport {
    /// Pairs whose synset was found in the wordnet file.
    pub matched: usize,
    pub total: usize,
    pub duplicate_synsets: usize,
}

impl ContextReport {
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }
}

pub fn attach_context(dataset: Dataset, wordnet_path: impl AsRef<Path>) -> Result<(Dataset, ContextReport)> {
    let path = wordnet_path.as_ref();
    let text = read_to_string(path)?;
    let entries = parse_wordnet(&text, &path.display().to_string())?;
    Ok(attach_parsed_context(dataset, entries))
}

/// Parsed wordnet rows (first occurrence per synset) plus the duplicate count.
pub struct WordnetEntries {
    pub clues: BTreeMap<u64, ContextClues>,
    pub duplicates: usize,
}

pub fn parse_wordnet(text: &str, file: &str) -> Result<WordnetEntries> {
    let mut clues = BTreeMap::new();
    let mut duplicates = 0;
    let mut first = true;
    for (line, row) in data_lines(text) {
        let fields: Vec<&str> = row.split('\t').collect();
        if first {
            first = false;
            if fields[0].trim().eq_ignore_ascii_case("synset_id") {
                continue;
            }
        }
        let id: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(file, line, format!("synset_id {:?} is not a non-negative integer", fields[0])))?;
        let field = |i: usize| fields.get(i).map(|s| s.trim().to_owned()).unwrap_or_default();
        match clues.entry(id) {
            Entry::Occupied(_) => duplicates += 1,
            Entry::Vacant(slot) => {
                slot.insert(ContextClues {
                    gloss_source: field(1),
                    example_source: field(2),
                    gloss_target: field(3),
                    example_target: field(4),
                });
            }
        }
    }
    if duplicates > 0 {
        warn!("{file}: {duplicates} duplicate synset rows ignored (first occurrence kept)");
    }
    Ok(WordnetEntries { clues, duplicates })
}

pub fn attach_parsed_context(mut dataset: Dataset, entries: WordnetEntries) -> (Dataset, ContextReport) {
    let mut report = ContextReport {
        total: dataset.pairs.len(),
        duplicate_synsets: entries.duplicates,
        ..Default::default()
    };
    let mut context = BTreeMap::new();
    for pair in &dataset.pairs {
        if let Some(c) = entries.clues.get(&pair.synset_id) {
            report.matched += 1;
            context.insert(pair.synset_id, c.clone());
        }
    }
    dataset.context = context;
    (dataset, report)
}

/// Pairs as a TSV with a `source, target, synset_id, label` header.
pub fn pairs_tsv(dataset: &Dataset) -> String {
    let mut out = String::from("source\ttarget\tsynset_id\tlabel\n");
    for p in &dataset.pairs {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", p.source_word, p.target_word, p.synset_id, p.label.as_u8()));
    }
    out
}

/// Undersample the majority class to the minority count.
pub fn balance_dataset(dataset: &Dataset, seed: u64) -> Result<Dataset> {
    let counts = dataset.counts();
    if counts.cognates == 0 || counts.false_friends == 0 {
        return Err(Error::InvalidDataset(format!(
            "cannot balance: class counts {{1: {}, 0: {}}}",
            counts.cognates, counts.false_friends
        )));
    }
    let (majority, minority_count) = if counts.cognates >= counts.false_friends {
        (Label::Cognate, counts.false_friends)
    } else {
        (Label::FalseFriend, counts.cognates)
    };
    let mut keep: Vec<bool> = dataset.pairs.iter().map(|p| p.label != majority).collect();
    let majority_idx = dataset.indices_of(majority);
    let mut rng = rng::seeded(seed);
    for i in index::sample(&mut rng, majority_idx.len(), minority_count) {
        keep[majority_idx[i]] = true;
    }
    Ok(dataset.select(&keep, format!("{}-balanced", dataset.provenance.name), Some(seed)))
}

/// Draw `n_per_class` pairs of each label. Returns `(subset, remainder)`.
pub fn split_gaze_subset(dataset: &Dataset, n_per_class: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let counts = dataset.counts();
    for label in [Label::Cognate, Label::FalseFriend] {
        if n_per_class > counts.get(label) {
            return Err(Error::Range(format!(
                "requested {n_per_class} pairs per class but class {label} has {}",
                counts.get(label)
            )));
        }
    }
    let mut rng = rng::seeded(seed);
    let mut in_subset = vec![false; dataset.len()];
    for label in [Label::Cognate, Label::FalseFriend] {
        let idx = dataset.indices_of(label);
        for i in index::sample(&mut rng, idx.len(), n_per_class) {
            in_subset[idx[i]] = true;
        }
    }
    let rest: Vec<bool> = in_subset.iter().map(|b| !b).collect();
    let base = &dataset.provenance.name;
    Ok((
        dataset.select(&in_subset, format!("{base}-gaze-subset"), Some(seed)),
        dataset.select(&rest, format!("{base}-remainder"), Some(seed)),
    ))
}

/// How the gaze subset relates to the large dataset in combined experiments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// The large dataset excludes the gaze subset; combining yields each pair once.
    #[default]
    Disjoint,
    /// The large dataset still contains the gaze subset; combining duplicates it.
    Overlapping,
}

/// Concatenate two datasets, `first` then `second`.
pub fn concat(first: &Dataset, second: &Dataset, name: &str) -> Dataset {
    let mut pairs = first.pairs.clone();
    pairs.extend(second.pairs.iter().cloned());
    let mut context = first.context.clone();
    for (id, c) in &second.context {
        context.entry(*id).or_insert_with(|| c.clone());
    }
    Dataset {
        pairs,
        context,
        provenance: Provenance {
            name: name.to_owned(),
            seed: first.provenance.seed,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn pair(s: &str, id: u64, label: Label) -> LabeledPair {
        LabeledPair::new(s, s, id, label).unwrap()
    }

    fn skewed(pos: usize, neg: usize) -> Dataset {
        let mut pairs = Vec::new();
        for i in 0..pos {
            pairs.push(pair(&format!("c{i}"), i as u64, Label::Cognate));
        }
        for i in 0..neg {
            pairs.push(pair(&format!("f{i}"), 100_000 + i as u64, Label::FalseFriend));
        }
        Dataset::from_pairs("toy", pairs)
    }

    #[test]
    fn parses_two_rows() {
        let ds = parse_cognate_pairs("अंक\tअंक\t42\t1\nशिक्षा\tशिक्षा\t7\t0\n", "t", "t", &ColumnSpec::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.counts(), ClassCounts { cognates: 1, false_friends: 1 });
        assert_eq!(ds.pairs[0].synset_id, 42);
        assert_eq!(ds.pairs[1].label, Label::FalseFriend);
    }

    #[test]
    fn short_row_reports_line() {
        let err = parse_cognate_pairs("a\tb\t3\n", "pairs.tsv", "p", &ColumnSpec::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_label_and_synset() {
        let err = parse_cognate_pairs("a\tb\t3\t1\na\tb\tx\t1\n", "f", "p", &ColumnSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_cognate_pairs("a\tb\t3\t2\n", "f", "p", &ColumnSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn header_and_comments_skipped() {
        let text = "source\ttarget\tsynset_id\tlabel\n# note\n\na\tb\t1\t1\n";
        let ds = parse_cognate_pairs(text, "f", "p", &ColumnSpec::default()).unwrap();
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn custom_columns() {
        let spec = ColumnSpec { source: 1, target: 2, synset_id: 0, label: 3 };
        let ds = parse_cognate_pairs("5\tx\ty\t0\n", "f", "p", &spec).unwrap();
        assert_eq!(ds.pairs[0].source_word, "x");
        assert_eq!(ds.pairs[0].synset_id, 5);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_cognate_pairs("/nonexistent/pairs.tsv", &ColumnSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn context_hit_miss_and_duplicates() {
        let ds = Dataset::from_pairs(
            "t",
            vec![pair("a", 42, Label::Cognate), pair("b", 7, Label::FalseFriend)],
        );
        let wn = parse_wordnet("42\tg1\te1\tg2\te2\n42\tX\tX\tX\tX\n", "wn").unwrap();
        assert_eq!(wn.duplicates, 1);
        let (ds, report) = attach_parsed_context(ds, wn);
        let clues = ds.clues_for(&ds.pairs[0]);
        assert_eq!(clues.gloss_source, "g1");
        assert_eq!(clues.example_target, "e2");
        assert!(ds.clues_for(&ds.pairs[1]).is_empty());
        assert_eq!(report.matched, 1);
        assert_eq!(report.total, 2);
    }

    #[test]
    fn context_from_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "7\tgloss\t\tलक्ष्य\tउदाहरण").unwrap();
        let ds = Dataset::from_pairs("t", vec![pair("a", 7, Label::Cognate)]);
        let (ds, report) = attach_context(ds, f.path()).unwrap();
        let c = ds.clues_for(&ds.pairs[0]);
        assert_eq!(c.example_source, "");
        assert!(c.has_missing_field());
        assert_eq!(c.source_text(), "gloss");
        assert_eq!(c.target_text(), "लक्ष्य उदाहरण");
        assert_eq!(report.coverage(), 1.0);
    }

    #[test]
    fn balance_undersamples_majority() {
        let ds = skewed(30, 12);
        let b = balance_dataset(&ds, 3).unwrap();
        assert_eq!(b.counts(), ClassCounts { cognates: 12, false_friends: 12 });
        // minority untouched and original order preserved
        let negs: Vec<_> = b.pairs.iter().filter(|p| p.label == Label::FalseFriend).collect();
        assert_eq!(negs.len(), 12);
        let positions: Vec<usize> = b
            .pairs
            .iter()
            .map(|p| ds.pairs.iter().position(|q| q == p).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b, balance_dataset(&ds, 3).unwrap());
    }

    #[test]
    fn balance_paper_counts() {
        let b = balance_dataset(&skewed(15726, 5826), 11).unwrap();
        assert_eq!(b.counts(), ClassCounts { cognates: 5826, false_friends: 5826 });
    }

    #[test]
    fn balanced_input_unchanged() {
        let ds = skewed(10, 10);
        let b = balance_dataset(&ds, 1).unwrap();
        assert_eq!(b.pairs, ds.pairs);
    }

    #[test]
    fn balance_rejects_single_class() {
        assert!(matches!(balance_dataset(&skewed(4, 0), 1), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn gaze_subset_sizes() {
        let d1 = skewed(5826, 5826);
        let (d2, rest) = split_gaze_subset(&d1, 100, 5).unwrap();
        assert_eq!(d2.counts(), ClassCounts { cognates: 100, false_friends: 100 });
        assert_eq!(rest.counts(), ClassCounts { cognates: 5726, false_friends: 5726 });
        let (empty, all) = split_gaze_subset(&d1, 0, 5).unwrap();
        assert!(empty.is_empty());
        assert_eq!(all.pairs, d1.pairs);
        assert!(matches!(split_gaze_subset(&skewed(100, 100), 101, 5), Err(Error::Range(_))));
    }

    #[test]
    fn concat_keeps_order() {
        let a = skewed(1, 1);
        let b = Dataset::from_pairs("b", vec![pair("z", 9, Label::Cognate)]);
        let c = concat(&a, &b, "ab");
        assert_eq!(c.len(), 3);
        assert_eq!(c.pairs[2].source_word, "z");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use std::collections::HashMap;

        fn multiset(pairs: &[LabeledPair]) -> HashMap<String, usize> {
            let mut m = HashMap::new();
            for p in pairs {
                *m.entry(format!("{}|{}", p.key(), p.label)).or_insert(0) += 1;
            }
            m
        }

        proptest! {
            #[test]
            fn balance_equalises(pos in 1usize..60, neg in 1usize..60, seed in any::<u64>()) {
                let b = balance_dataset(&skewed(pos, neg), seed).unwrap();
                let m = pos.min(neg);
                prop_assert_eq!(b.counts(), ClassCounts { cognates: m, false_friends: m });
            }

            #[test]
            fn split_partitions(pos in 0usize..40, neg in 0usize..40, frac in 0.0f64..1.0, seed in any::<u64>()) {
                let ds = skewed(pos, neg);
                let n = (frac * pos.min(neg) as f64) as usize;
                let (sub, rest) = split_gaze_subset(&ds, n, seed).unwrap();
                let mut joined = sub.pairs.clone();
                joined.extend(rest.pairs.iter().cloned());
                prop_assert_eq!(multiset(&joined), multiset(&ds.pairs));
                prop_assert_eq!(sub.counts(), ClassCounts { cognates: n, false_friends: n });
            }

            #[test]
            fn parsing_is_deterministic(rows in proptest::collection::vec(("[a-zक-ह]{1,5}", 0u64..1000, 0u8..2), 0..20)) {
                let text: String = rows.iter().map(|(w, id, l)| format!("{w}\t{w}\t{id}\t{l}\n")).collect();
                let a = parse_cognate_pairs(&text, "f", "p", &ColumnSpec::default()).unwrap();
                let b = parse_cognate_pairs(&text, "f", "p", &ColumnSpec::default()).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
