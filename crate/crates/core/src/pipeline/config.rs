use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{ColumnSpec, Composition};
use crate::error::{Error, Result};
use crate::gaze::{SaccadeAmplitude, DEFAULT_MIN_FIXATION_MS, DEFAULT_SELECTED, RAW_FEATURE_COUNT};
use crate::learn::{Activation, ModelKind, Objective, TrainConfig};
use crate::lexsim::{DEFAULT_ALPHA, DEFAULT_Q};
use crate::xling::AlignOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Cross-validation folds.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub composition: Composition,
    #[serde(default)]
    pub objective: Objective,
    pub feature_sets: Vec<String>,
    #[serde(default = "default_datasets")]
    pub datasets: Vec<DatasetKind>,
    pub data: DataConfig,
    #[serde(default)]
    pub embeddings: BTreeMap<String, EmbeddingConfig>,
    #[serde(default)]
    pub lexical: LexicalConfig,
    #[serde(default)]
    pub phonetics: PhoneticsConfig,
    pub gaze: Option<GazeConfig>,
    pub gaze_regressor: Option<RegressorConfig>,
    #[serde(default)]
    pub models: ModelsConfig,
    /// Hash of the config as written, before path resolution.
    #[serde(skip)]
    hash: String,
}

fn default_k() -> usize {
    5
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_datasets() -> Vec<DatasetKind> {
    vec![DatasetKind::D1, DatasetKind::D2, DatasetKind::D1D2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DatasetKind {
    /// The large balanced dataset.
    #[serde(rename = "d1")]
    D1,
    /// Pairs with gaze recordings.
    #[serde(rename = "d2")]
    D2,
    #[serde(rename = "d1+d2")]
    D1D2,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::D1 => "d1",
            DatasetKind::D2 => "d2",
            DatasetKind::D1D2 => "d1+d2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub pairs: PathBuf,
    pub wordnet: Option<PathBuf>,
    #[serde(default = "yes")]
    pub balance: bool,
    #[serde(default)]
    pub columns: ColumnSpec,
    /// Size per class of a random held-out subset, used when no gaze recordings are configured.
    pub gaze_subset_n: Option<usize>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub source: PathBuf,
    pub target: PathBuf,
    /// Bilingual dictionary for mapping the source space onto the target space.
    pub dictionary: Option<PathBuf>,
    #[serde(default)]
    pub align: AlignOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexicalConfig {
    pub q: usize,
    pub alpha: f64,
}

impl Default for LexicalConfig {
    fn default() -> Self {
        LexicalConfig {
            q: DEFAULT_Q,
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhoneticsConfig {
    /// Feature table; the bundled Devanagari table when absent.
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordCount {
    /// Interest areas on screen.
    #[default]
    IaCount,
    /// Whitespace tokens of both context sentences plus the two words.
    ContextTokens,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeConfig {
    pub reports: Vec<PathBuf>,
    pub trial_map: PathBuf,
    #[serde(default = "default_min_fixation")]
    pub min_fixation_ms: u64,
    #[serde(default)]
    pub amplitude: SaccadeAmplitude,
    /// Raw feature indices to keep. Ignored when `select_k` is set.
    #[serde(default = "default_selected")]
    pub selected: Vec<usize>,
    /// Grid of k for ANOVA-ranked selection.
    pub select_k: Option<Vec<usize>>,
    #[serde(default)]
    pub word_count: WordCount,
}

fn default_min_fixation() -> u64 {
    DEFAULT_MIN_FIXATION_MS
}

fn default_selected() -> Vec<usize> {
    DEFAULT_SELECTED.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorConfig {
    /// Embedding set providing the regressor inputs.
    pub embedding: String,
    /// Use context vectors as well as word vectors.
    #[serde(default = "yes")]
    pub include_context: bool,
    #[serde(default = "default_hidden_layers")]
    pub hidden_layers: Vec<usize>,
    #[serde(default = "default_regressor_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_regressor_lr")]
    pub lr: f64,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
}

fn default_hidden_layers() -> Vec<usize> {
    vec![128, 64, 32]
}
fn default_regressor_epochs() -> usize {
    200
}
fn default_batch() -> usize {
    32
}
fn default_regressor_lr() -> f64 {
    0.1
}
fn default_dropout() -> f64 {
    0.2
}

impl RegressorConfig {
    pub fn train_config(&self, output_dim: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_layers: self.hidden_layers.clone(),
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            lr_initial: self.lr,
            dropout: self.dropout,
            ..TrainConfig::gaze_regressor(output_dim)
        }
        .with_seed(seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsConfig {
    pub list: Vec<ModelKind>,
    pub c_grid: Vec<f64>,
    pub hidden_grid: Vec<usize>,
    pub activations: Vec<Activation>,
    pub logreg_max_epochs: usize,
    pub svm_max_epochs: usize,
    pub ffnn_max_epochs: usize,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            list: vec![ModelKind::Logreg, ModelKind::LinearSvm, ModelKind::FfnnClassifier],
            c_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0, 1000.0],
            hidden_grid: vec![30, 50, 100, 150],
            activations: Activation::ALL.to_vec(),
            logreg_max_epochs: TrainConfig::logreg(1.0).max_epochs,
            svm_max_epochs: TrainConfig::linear_svm(1.0).max_epochs,
            ffnn_max_epochs: TrainConfig::ffnn(1, Activation::Tanh).max_epochs,
        }
    }
}

impl ModelsConfig {
    /// Hyper-parameter grid for one model kind.
    pub fn grid(&self, kind: ModelKind, seed: u64) -> Vec<TrainConfig> {
        match kind {
            ModelKind::Logreg => self
                .c_grid
                .iter()
                .map(|&c| TrainConfig {
                    max_epochs: self.logreg_max_epochs,
                    ..TrainConfig::logreg(c)
                })
                .collect(),
            ModelKind::LinearSvm => self
                .c_grid
                .iter()
                .map(|&c| TrainConfig {
                    max_epochs: self.svm_max_epochs,
                    ..TrainConfig::linear_svm(c)
                })
                .collect(),
            ModelKind::FfnnClassifier => self
                .activations
                .iter()
                .flat_map(|&a| {
                    self.hidden_grid.iter().map(move |&h| TrainConfig {
                        max_epochs: self.ffnn_max_epochs,
                        ..TrainConfig::ffnn(h, a)
                    })
                })
                .collect(),
            ModelKind::GazeRegressor => Vec::new(),
        }
        .into_iter()
        .map(|c| c.with_seed(seed))
        .collect()
    }
}

/// Parsed feature-set name such as `xlm+gaze` or `lexical`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub name: String,
    pub embedding: Option<String>,
    pub gaze: GazeSource,
    pub lexical: bool,
    pub phonetic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GazeSource {
    None,
    /// Recorded gaze where available, predicted otherwise.
    Collected,
    Predicted,
}

impl FeatureSet {
    pub fn parse(name: &str, embeddings: &BTreeMap<String, EmbeddingConfig>) -> Result<Self> {
        let mut fs = FeatureSet {
            name: name.to_owned(),
            embedding: None,
            gaze: GazeSource::None,
            lexical: false,
            phonetic: false,
        };
        for token in name.split('+').map(str::trim) {
            let dup = || Error::Config(format!("feature set {name:?} repeats a block"));
            match token {
                "gaze" | "predicted_gaze" => {
                    if fs.gaze != GazeSource::None {
                        return Err(dup());
                    }
                    fs.gaze = if token == "gaze" { GazeSource::Collected } else { GazeSource::Predicted };
                }
                "lexical" => {
                    if std::mem::replace(&mut fs.lexical, true) {
                        return Err(dup());
                    }
                }
                "phonetic" => {
                    if std::mem::replace(&mut fs.phonetic, true) {
                        return Err(dup());
                    }
                }
                e if embeddings.contains_key(e) => {
                    if fs.embedding.replace(e.to_owned()).is_some() {
                        return Err(dup());
                    }
                }
                other => return Err(Error::Config(format!("unknown feature block {other:?} in {name:?}"))),
            }
        }
        Ok(fs)
    }
}

impl ExperimentConfig {
    /// Parse a TOML config; relative paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let json = serde_json::to_vec(&cfg)?;
        cfg.hash = hex::encode(Sha256::digest(&json));
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.data.pairs);
        self.data.wordnet.as_mut().map(fix);
        for e in self.embeddings.values_mut() {
            fix(&mut e.source);
            fix(&mut e.target);
            e.dictionary.as_mut().map(fix);
        }
        self.phonetics.table.as_mut().map(fix);
        if let Some(g) = &mut self.gaze {
            g.reports.iter_mut().for_each(fix);
            fix(&mut g.trial_map);
        }
    }

    pub fn parsed_feature_sets(&self) -> Result<Vec<FeatureSet>> {
        self.feature_sets
            .iter()
            .map(|n| FeatureSet::parse(n, &self.embeddings))
            .collect()
    }

    /// Check structure and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.feature_sets.is_empty() {
            return bad("at least one feature set is required".into());
        }
        if self.models.list.is_empty() {
            return bad("at least one model is required".into());
        }
        if let Some(m) = self.models.list.iter().find(|m| !m.is_classifier()) {
            return bad(format!("{m:?} is not a classifier"));
        }
        if self.datasets.is_empty() {
            return bad("at least one dataset is required".into());
        }
        if self.k < 2 {
            return bad(format!("k = {} must be at least 2", self.k));
        }
        let sets = self.parsed_feature_sets()?;
        let needs_gaze = sets.iter().any(|s| s.gaze != GazeSource::None);
        if needs_gaze && self.gaze.is_none() {
            return bad("gaze feature sets need a [gaze] section".into());
        }
        if sets.iter().any(|s| s.gaze == GazeSource::Predicted) && self.gaze_regressor.is_none() {
            return bad("predicted_gaze needs a [gaze_regressor] section".into());
        }
        if let Some(r) = &self.gaze_regressor {
            if !self.embeddings.contains_key(&r.embedding) {
                return bad(format!("gaze_regressor.embedding {:?} is not a configured embedding", r.embedding));
            }
            if self.gaze.is_none() {
                return bad("[gaze_regressor] needs a [gaze] section".into());
            }
        }
        if let Some(g) = &self.gaze {
            if g.reports.is_empty() {
                return bad("gaze.reports is empty".into());
            }
            if let Some(&i) = g.selected.iter().find(|&&i| i >= RAW_FEATURE_COUNT) {
                return bad(format!("gaze.selected index {i} exceeds {RAW_FEATURE_COUNT}"));
            }
            if g.select_k.is_none() && g.selected.is_empty() {
                return bad("gaze.selected is empty".into());
            }
        }
        if !(0.0..=1.0).contains(&self.lexical.alpha) || self.lexical.q == 0 {
            return bad("lexical.q must be positive and lexical.alpha in [0, 1]".into());
        }
        for path in self.input_files() {
            if !path.is_file() {
                return bad(format!("input file {} does not exist", path.display()));
            }
        }
        Ok(())
    }

    pub fn input_files(&self) -> Vec<&Path> {
        let mut out = vec![self.data.pairs.as_path()];
        out.extend(self.data.wordnet.as_deref());
        for e in self.embeddings.values() {
            out.push(&e.source);
            out.push(&e.target);
            out.extend(e.dictionary.as_deref());
        }
        out.extend(self.phonetics.table.as_deref());
        if let Some(g) = &self.gaze {
            out.extend(g.reports.iter().map(PathBuf::as_path));
            out.push(&g.trial_map);
        }
        out
    }

    /// SHA-256 of the canonical JSON form of the config before its paths were resolved.
    pub fn hash(&self) -> &str {
        &self.hash
    }
}
