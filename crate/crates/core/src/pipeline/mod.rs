//! Experiment orchestration: load inputs, build feature matrices, run
//! cross-validated grid searches for every requested cell and write reports.

mod config;
mod report;

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use log::{info, warn};
use nalgebra::DMatrix;
use rayon::prelude::*;

pub use config::{
    DataConfig, DatasetKind, EmbeddingConfig, ExperimentConfig, FeatureSet, GazeConfig, GazeSource, LexicalConfig,
    ModelsConfig, PhoneticsConfig, RegressorConfig, WordCount,
};
pub use report::{
    gaze_comparison_csv, report_csv, write_outputs, AlignmentSummary, DatasetSummary, EvalReport, EvalRow,
    GazeComparisonRow, GazeSummary, RegressorSummary, RowStatus, GAZE_COMPARISON_HEADER, REPORT_CSV_HEADER,
};

use crate::corpus::{self, Composition, Dataset, LabeledPair};
use crate::error::{Error, Result};
use crate::gaze::{self, FeatureSelection, TrialDuration, TrialGazeVector, RAW_FEATURE_NAMES};
use crate::learn::{grid_search, stratified_kfold, train_gaze_regressor, ModelKind};
use crate::lexsim::lexical_features;
use crate::phonetics::{phonetic_pair_features, PhoneticTable};
use crate::rng::derive_seed;
use crate::xling::{
    apply_mapping, dictionary_matrices, load_dictionary, load_embeddings, pair_feature_vector, procrustes_align,
    EmbeddingTable,
};

const STREAM_BALANCE: u64 = 1;
const STREAM_SUBSET: u64 = 2;
const STREAM_CV: u64 = 3;
const STREAM_REGRESSOR: u64 = 4;
const STREAM_SELECTION: u64 = 5;
const STREAM_MODELS: u64 = 6;

/// Everything loaded from disk, shared read-only by all cells.
pub struct Inputs {
    pub pairs: Dataset,
    pub embeddings: BTreeMap<String, (EmbeddingTable, EmbeddingTable)>,
    pub alignments: Vec<AlignmentSummary>,
    pub phonetic: PhoneticTable,
    pub gaze: Option<GazeInputs>,
}

pub struct GazeInputs {
    pub vectors: Vec<TrialGazeVector>,
    /// Pair key of each vector.
    pub vector_pairs: Vec<String>,
    pub selected: Vec<usize>,
    pub selection: Option<FeatureSelection>,
    /// Recorded gaze per pair key, averaged over participants.
    pub gold: BTreeMap<String, Vec<f64>>,
    pub summary: GazeSummary,
    pub analysis: Vec<gaze::ParticipantAnalysis>,
}

pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Inputs> {
    let dataset = corpus::load_cognate_pairs(&cfg.data.pairs, &cfg.data.columns)?;
    let dataset = match &cfg.data.wordnet {
        Some(w) => {
            let (ds, rep) = corpus::attach_context(dataset, w)?;
            info!("context attached to {}/{} pairs", rep.matched, rep.total);
            ds
        }
        None => dataset,
    };
    let mut embeddings = BTreeMap::new();
    let mut alignments = Vec::new();
    for (name, e) in &cfg.embeddings {
        let (mut source, _) = load_embeddings(&e.source)?;
        let (target, _) = load_embeddings(&e.target)?;
        if let Some(dict) = &e.dictionary {
            let entries = load_dictionary(dict)?;
            let (x, z, used) = dictionary_matrices(&source, &target, &entries)?;
            let map = procrustes_align(&x, &z, &e.align)?;
            info!("{name}: aligned with {used} of {} dictionary entries", entries.len());
            alignments.push(AlignmentSummary {
                embedding: name.clone(),
                dictionary_entries: entries.len(),
                entries_used: used,
                orthogonality_error: map.orthogonality_error(),
            });
            source = apply_mapping(&source, &map)?;
        }
        embeddings.insert(name.clone(), (source, target));
    }
    let phonetic = match &cfg.phonetics.table {
        Some(p) => PhoneticTable::load(p)?,
        None => PhoneticTable::builtin(),
    };
    let gaze = cfg
        .gaze
        .as_ref()
        .map(|g| load_gaze(g, &dataset, derive_seed(cfg.seed, STREAM_SELECTION)))
        .transpose()?;
    Ok(Inputs {
        pairs: dataset,
        embeddings,
        alignments,
        phonetic,
        gaze,
    })
}

/// Recorded gaze for the pairs of `dataset`: per-trial vectors, optional
/// feature selection, per-pair averages and the fixation-time analysis.
pub fn load_gaze(g: &GazeConfig, dataset: &Dataset, seed: u64) -> Result<GazeInputs> {
    let mut events = Vec::new();
    let mut dropped = 0;
    for path in &g.reports {
        let r = gaze::load_fixation_report(path, g.min_fixation_ms)?;
        dropped += r.dropped_short;
        events.extend(r.events);
    }
    let trials = gaze::load_trial_map(&g.trial_map)?;
    let by_identity: HashMap<(u64, &str, &str), &LabeledPair> = dataset
        .pairs
        .iter()
        .map(|p| ((p.synset_id, p.source_word.as_str(), p.target_word.as_str()), p))
        .collect();
    let mut trial_pair: HashMap<&str, &LabeledPair> = HashMap::new();
    for t in trials.values() {
        match by_identity.get(&(t.synset_id, t.source.as_str(), t.target.as_str())) {
            Some(p) => {
                trial_pair.insert(&t.trial_id, p);
            }
            None => warn!("trial {} does not match any pair in the dataset", t.trial_id),
        }
    }
    let extraction = gaze::extract_all(&events, &trials, g.amplitude, &g.selected);
    let (mut vectors, vector_pairs): (Vec<TrialGazeVector>, Vec<&LabeledPair>) = extraction
        .vectors
        .into_iter()
        .filter_map(|v| trial_pair.get(v.trial_id.as_str()).map(|&p| (v, p)))
        .unzip();
    if vectors.is_empty() {
        return Err(Error::MissingGaze("every configured trial".into()));
    }

    let selection = match &g.select_k {
        Some(grid) => {
            let x = DMatrix::from_fn(vectors.len(), gaze::RAW_FEATURE_COUNT, |i, j| vectors[i].raw[j]);
            let y: Vec<u8> = vector_pairs.iter().map(|p| p.label.as_u8()).collect();
            Some(gaze::select_k_best(&x, &y, grid, seed)?)
        }
        None => None,
    };
    let selected = selection.as_ref().map_or_else(|| g.selected.clone(), |s| s.indices.clone());
    vectors.iter_mut().for_each(|v| v.reselect(&selected));

    let mut per_pair: BTreeMap<String, Vec<&[f64]>> = BTreeMap::new();
    for (v, p) in vectors.iter().zip(&vector_pairs) {
        per_pair.entry(p.key()).or_default().push(&v.selected);
    }
    let gold: BTreeMap<String, Vec<f64>> = per_pair
        .into_iter()
        .map(|(k, vs)| gaze::average_over_participants(&vs).map(|a| (k, a.values)))
        .collect::<Result<_>>()?;

    let durations: Vec<TrialDuration> = vectors
        .iter()
        .zip(&vector_pairs)
        .map(|(v, p)| TrialDuration {
            participant: v.participant.clone(),
            label: p.label,
            total_fixation_ms: v.raw[8],
            word_count: match g.word_count {
                WordCount::IaCount => trials[&v.trial_id].ia_count as f64,
                WordCount::ContextTokens => {
                    let c = dataset.clues_for(p);
                    (2 + c.source_text().split_whitespace().count() + c.target_text().split_whitespace().count()) as f64
                }
            },
        })
        .collect();
    let analysis = gaze::fixation_duration_analysis(&durations);
    for a in &analysis {
        if let Err(e) = &a.outcome {
            warn!("fixation-duration analysis skipped participant {}: {e}", a.participant);
        }
    }
    let summary = GazeSummary {
        fixations_dropped_short: dropped,
        trials_extracted: vectors.len(),
        trials_excluded: extraction.excluded.len(),
        pairs_with_gaze: gold.len(),
        selected_features: selected.iter().map(|&i| RAW_FEATURE_NAMES[i].to_owned()).collect(),
        regressor: None,
    };
    Ok(GazeInputs {
        vectors,
        vector_pairs: vector_pairs.iter().map(|p| p.key()).collect(),
        selected,
        selection,
        gold,
        summary,
        analysis,
    })
}

/// The three evaluation datasets.
pub fn build_datasets(cfg: &ExperimentConfig, inputs: &Inputs) -> Result<BTreeMap<DatasetKind, Dataset>> {
    let all = &inputs.pairs;
    let balance = |ds: &Dataset| -> Result<Dataset> {
        if cfg.data.balance {
            corpus::balance_dataset(ds, derive_seed(cfg.seed, STREAM_BALANCE))
        } else {
            Ok(ds.clone())
        }
    };
    let (d1, d2) = match &inputs.gaze {
        Some(g) => {
            let d2 = all.subset("d2", |p| g.gold.contains_key(&p.key()));
            let d1 = match cfg.composition {
                Composition::Disjoint => balance(&all.subset("d1", |p| !g.gold.contains_key(&p.key())))?,
                Composition::Overlapping => balance(all)?,
            };
            (d1, d2)
        }
        None => {
            let balanced = balance(all)?;
            match cfg.data.gaze_subset_n {
                Some(n) => {
                    let (sub, rest) = corpus::split_gaze_subset(&balanced, n, derive_seed(cfg.seed, STREAM_SUBSET))?;
                    match cfg.composition {
                        Composition::Disjoint => (rest, sub),
                        Composition::Overlapping => (balanced, sub),
                    }
                }
                None => (balanced, Dataset::from_pairs("d2", Vec::new())),
            }
        }
    };
    let both = corpus::concat(&d1, &d2, "d1+d2");
    let mut out = BTreeMap::new();
    for kind in &cfg.datasets {
        let ds = match kind {
            DatasetKind::D1 => d1.clone(),
            DatasetKind::D2 => d2.clone(),
            DatasetKind::D1D2 => both.clone(),
        };
        out.insert(*kind, ds);
    }
    Ok(out)
}

fn regressor_input(tables: &(EmbeddingTable, EmbeddingTable), pair: &LabeledPair, ds: &Dataset, context: bool) -> Result<Vec<f64>> {
    let v = pair_feature_vector(&tables.0, &tables.1, pair, ds.clues_for(pair))?;
    Ok(if context {
        v.concat()
    } else {
        v.wv_s.iter().chain(&v.wv_t).copied().collect()
    })
}

/// Predicted gaze for every pair. Pairs with recordings get out-of-fold
/// predictions; the rest come from a model trained on all recorded pairs.
pub fn predict_gaze(
    cfg: &ExperimentConfig,
    inputs: &Inputs,
    gaze_in: &GazeInputs,
) -> Result<(BTreeMap<String, Vec<f64>>, RegressorSummary, Vec<GazeComparisonRow>)> {
    let rc = cfg.gaze_regressor.as_ref().expect("checked by caller");
    let tables = &inputs.embeddings[&rc.embedding];
    let ds = &inputs.pairs;
    let gold_pairs: Vec<&LabeledPair> = ds.pairs.iter().filter(|p| gaze_in.gold.contains_key(&p.key())).collect();
    let dim_out = gaze_in.selected.len();
    let rows = |pairs: &[&LabeledPair]| -> Result<DMatrix<f64>> {
        let feats = pairs
            .iter()
            .map(|p| regressor_input(tables, p, ds, rc.include_context))
            .collect::<Result<Vec<_>>>()?;
        let d = feats.first().map_or(0, Vec::len);
        Ok(DMatrix::from_fn(feats.len(), d, |i, j| feats[i][j]))
    };
    let x_gold = rows(&gold_pairs)?;
    let y_gold = DMatrix::from_fn(gold_pairs.len(), dim_out, |i, j| gaze_in.gold[&gold_pairs[i].key()][j]);
    let base_seed = derive_seed(cfg.seed, STREAM_REGRESSOR);
    let full = train_gaze_regressor(&x_gold, &y_gold, &rc.train_config(dim_out, base_seed))?;

    let mut predicted = BTreeMap::new();
    let labels: Vec<u8> = gold_pairs.iter().map(|p| p.label.as_u8()).collect();
    let mut oof = DMatrix::zeros(gold_pairs.len(), dim_out);
    let out_of_fold = match stratified_kfold(&labels, cfg.k, base_seed) {
        Ok(folds) => {
            for f in 0..folds.k {
                let (tr, te) = folds.split(f);
                let m = train_gaze_regressor(
                    &x_gold.select_rows(&tr),
                    &y_gold.select_rows(&tr),
                    &rc.train_config(dim_out, derive_seed(base_seed, f as u64 + 1)),
                )?;
                let p = m.predict_values(&x_gold.select_rows(&te))?;
                for (r, &i) in te.iter().enumerate() {
                    oof.set_row(i, &p.row(r));
                }
            }
            true
        }
        Err(e) => {
            warn!("out-of-fold gaze prediction unavailable ({e}); using in-sample predictions");
            oof = full.predict_values(&x_gold)?;
            false
        }
    };
    let mut comparison = Vec::new();
    for (i, p) in gold_pairs.iter().enumerate() {
        let pred: Vec<f64> = oof.row(i).iter().copied().collect();
        for (j, &feat) in gaze_in.selected.iter().enumerate() {
            comparison.push(GazeComparisonRow {
                pair_id: p.key(),
                feature_name: RAW_FEATURE_NAMES[feat].to_owned(),
                gold: y_gold[(i, j)],
                predicted: pred[j],
            });
        }
        predicted.insert(p.key(), pred);
    }
    let others: Vec<&LabeledPair> = ds.pairs.iter().filter(|p| !gaze_in.gold.contains_key(&p.key())).collect();
    if !others.is_empty() {
        let p = full.predict_values(&rows(&others)?)?;
        for (i, pair) in others.iter().enumerate() {
            predicted.insert(pair.key(), p.row(i).iter().copied().collect());
        }
    }
    let mse = (&oof - &y_gold).norm_squared() / (y_gold.len().max(1)) as f64;
    let summary = RegressorSummary {
        training_pairs: gold_pairs.len(),
        input_dim: x_gold.ncols(),
        out_of_fold,
        final_training_loss: full.history.objective.last().copied().unwrap_or(f64::NAN),
        mean_squared_error: mse,
    };
    Ok((predicted, summary, comparison))
}

/// Feature matrix for one dataset in block order
/// `[embedding 4D+4 | gaze | lexical 2 | phonetic 4P]`.
pub fn feature_matrix(
    cfg: &ExperimentConfig,
    inputs: &Inputs,
    set: &FeatureSet,
    ds: &Dataset,
    gold: Option<&BTreeMap<String, Vec<f64>>>,
    predicted: Option<&BTreeMap<String, Vec<f64>>>,
) -> Result<DMatrix<f64>> {
    let rows = ds
        .pairs
        .iter()
        .map(|p| {
            let mut row = Vec::new();
            if let Some(e) = &set.embedding {
                let (s, t) = &inputs.embeddings[e];
                row.extend(pair_feature_vector(s, t, p, ds.clues_for(p))?.concat_with_flags());
            }
            let key = p.key();
            let gaze_row = match set.gaze {
                GazeSource::None => None,
                GazeSource::Collected => Some(
                    gold.and_then(|g| g.get(&key))
                        .or_else(|| predicted.and_then(|g| g.get(&key)))
                        .ok_or_else(|| Error::MissingGaze(format!("pair {key} (no recording and no prediction)")))?,
                ),
                GazeSource::Predicted => Some(
                    predicted
                        .and_then(|g| g.get(&key))
                        .ok_or_else(|| Error::MissingGaze(format!("pair {key} (no prediction)")))?,
                ),
            };
            row.extend(gaze_row.into_iter().flatten());
            if set.lexical {
                row.extend(lexical_features(&p.source_word, &p.target_word, cfg.lexical.q, cfg.lexical.alpha)?);
            }
            if set.phonetic {
                row.extend(phonetic_pair_features(p, ds.clues_for(p), &inputs.phonetic).concat());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let d = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

/// Run the whole experiment matrix and write the reports to `cfg.output_dir`.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<EvalReport> {
    let eval = evaluate(cfg)?;
    write_outputs(&eval, &cfg.output_dir)?;
    Ok(eval.report)
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    /// Recorded against predicted gaze, one row per (pair, feature).
    pub gaze_comparison: Vec<GazeComparisonRow>,
    /// Per-participant fixation-time test as CSV.
    pub gaze_analysis: Option<String>,
}

/// Run everything without writing to disk.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<Evaluation> {
    let started = Instant::now();
    let prep = prepare(cfg)?;
    let sets = cfg.parsed_feature_sets()?;
    let mut cells = Vec::new();
    for (&kind, ds) in &prep.datasets {
        for set in &sets {
            let matrix = prep.matrix(cfg, set, ds).map_err(|e| match (&prep.regressor_error, set.gaze) {
                (Some(r), GazeSource::Predicted | GazeSource::Collected) => format!("{e}; gaze regressor failed: {r}"),
                _ => e.to_string(),
            });
            for &model in &cfg.models.list {
                cells.push((kind, ds, set, model, matrix.clone()));
            }
        }
    }
    let cv_seed = derive_seed(cfg.seed, STREAM_CV);
    let model_seed = derive_seed(cfg.seed, STREAM_MODELS);
    let rows: Vec<EvalRow> = cells
        .into_par_iter()
        .map(|(kind, ds, set, model, matrix)| evaluate_cell(cfg, kind, ds, set, model, matrix, cv_seed, model_seed))
        .collect();

    let report = EvalReport {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        config_hash: cfg.hash().to_owned(),
        seed: cfg.seed,
        datasets: prep
            .datasets
            .iter()
            .map(|(k, d)| DatasetSummary {
                name: k.as_str().to_owned(),
                cognates: d.counts().cognates,
                false_friends: d.counts().false_friends,
            })
            .collect(),
        alignments: prep.inputs.alignments.clone(),
        gaze: prep.gaze_summary.clone(),
        rows,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(Evaluation {
        report,
        gaze_analysis: prep.inputs.gaze.as_ref().map(|g| gaze::analysis_csv(&g.analysis)),
        gaze_comparison: prep.gaze_comparison,
    })
}

/// Loaded inputs, evaluation datasets and predicted gaze, ready for feature assembly.
pub struct Prepared {
    pub inputs: Inputs,
    pub datasets: BTreeMap<DatasetKind, Dataset>,
    /// Predicted gaze per pair key, when a regressor is configured and trained.
    pub predicted_gaze: Option<BTreeMap<String, Vec<f64>>>,
    pub gaze_comparison: Vec<GazeComparisonRow>,
    pub gaze_summary: Option<GazeSummary>,
    pub regressor_error: Option<String>,
}

/// Validate the config, load every input and train the gaze regressor if one is configured.
/// A regressor failure is recorded rather than returned, so cells that do not need
/// predicted gaze can still run.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let datasets = build_datasets(cfg, &inputs)?;
    let mut gaze_summary = inputs.gaze.as_ref().map(|g| g.summary.clone());
    let mut gaze_comparison = Vec::new();
    let mut regressor_error = None;
    let predicted_gaze = match (&inputs.gaze, &cfg.gaze_regressor) {
        (Some(g), Some(_)) => match predict_gaze(cfg, &inputs, g) {
            Ok((pred, summary, cmp)) => {
                gaze_comparison = cmp;
                if let Some(s) = gaze_summary.as_mut() {
                    s.regressor = Some(summary);
                }
                Some(pred)
            }
            Err(e) => {
                warn!("gaze regressor failed: {e}");
                regressor_error = Some(e.to_string());
                None
            }
        },
        _ => None,
    };
    Ok(Prepared {
        inputs,
        datasets,
        predicted_gaze,
        gaze_comparison,
        gaze_summary,
        regressor_error,
    })
}

impl Prepared {
    pub fn matrix(&self, cfg: &ExperimentConfig, set: &FeatureSet, ds: &Dataset) -> Result<DMatrix<f64>> {
        let gold = self.inputs.gaze.as_ref().map(|g| &g.gold);
        feature_matrix(cfg, &self.inputs, set, ds, gold, self.predicted_gaze.as_ref())
    }
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cell(
    cfg: &ExperimentConfig,
    kind: DatasetKind,
    ds: &Dataset,
    set: &FeatureSet,
    model: ModelKind,
    matrix: std::result::Result<DMatrix<f64>, String>,
    cv_seed: u64,
    model_seed: u64,
) -> EvalRow {
    let mut row = EvalRow {
        dataset: kind.as_str().to_owned(),
        feature_set: set.name.clone(),
        model,
        status: RowStatus::Failed,
        reason: None,
        n_samples: ds.len(),
        n_features: 0,
        best_config: None,
        candidates: Vec::new(),
        folds: Vec::new(),
        mean: None,
    };
    let x = match matrix {
        Ok(x) => x,
        Err(reason) => {
            row.reason = Some(reason);
            return row;
        }
    };
    row.n_features = x.ncols();
    let y: Vec<u8> = ds.pairs.iter().map(|p| p.label.as_u8()).collect();
    let grid = cfg.models.grid(model, model_seed);
    match grid_search(&grid, &x, &y, cfg.k, cv_seed, cfg.objective) {
        Ok(res) => {
            info!(
                "{} / {} / {:?}: best {} f1 {:.4}",
                row.dataset,
                row.feature_set,
                model,
                res.best.config.describe(),
                res.best.mean.f1
            );
            row.status = RowStatus::Ok;
            row.best_config = Some(res.best.config.describe());
            row.candidates = res.candidates;
            row.folds = res.best.folds;
            row.mean = Some(res.best.mean);
        }
        Err(e) => {
            warn!("{} / {} / {:?} failed: {e}", row.dataset, row.feature_set, model);
            row.reason = Some(e.to_string());
        }
    }
    row
}
