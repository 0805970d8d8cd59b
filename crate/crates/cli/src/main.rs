//! Command-line front end for the cognate detection toolkit.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cognate::corpus::{self, ColumnSpec, Dataset};
use cognate::gaze::{self, SaccadeAmplitude, DEFAULT_MIN_FIXATION_MS, DEFAULT_SELECTED, RAW_FEATURE_COUNT, RAW_FEATURE_NAMES};
use cognate::learn::{grid_search, train, ModelKind};
use cognate::lexsim;
use cognate::phonetics::{avg_phonetic_vector, phonetic_pair_features, PhoneticTable};
use cognate::pipeline::{
    self, gaze_comparison_csv, report_csv, DatasetKind, EvalReport, ExperimentConfig, FeatureSet, GazeConfig,
    WordCount,
};
use cognate::xling::{self, AlignOptions};

#[derive(Parser)]
#[command(name = "cognate", version, about = "Cognate and false-friend detection")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a pairs file, attach context, balance and split; prints a JSON summary.
    Ingest(IngestArgs),
    /// Orthographic similarity per pair as TSV.
    Lexsim(LexsimArgs),
    /// Averaged phonetic vectors as JSON lines.
    Phonetics(PhoneticsArgs),
    /// Map a source embedding space onto a target space with a bilingual dictionary.
    Align(AlignArgs),
    /// Eye-tracking feature extraction, analysis and selection.
    #[command(subcommand)]
    Gaze(GazeCommand),
    /// Grid-search one model on one feature set, refit on all rows and save it.
    Train(TrainArgs),
    /// Train the gaze regressor and write predicted gaze for every pair.
    PredictGaze,
    /// Run the full experiment matrix from the config.
    Evaluate,
    /// Re-emit a saved report.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    wordnet: Option<PathBuf>,
    /// Undersample the majority class.
    #[arg(long)]
    balance: bool,
    /// Hold out this many pairs per class.
    #[arg(long)]
    gaze_subset_n: Option<usize>,
}

#[derive(Args)]
struct LexsimArgs {
    #[arg(long, conflicts_with_all = ["source", "target"])]
    pairs: Option<PathBuf>,
    #[arg(long, requires = "target")]
    source: Option<String>,
    #[arg(long, requires = "source")]
    target: Option<String>,
    #[arg(long, default_value_t = lexsim::DEFAULT_Q)]
    q: usize,
    #[arg(long, default_value_t = lexsim::DEFAULT_ALPHA)]
    alpha: f64,
}

#[derive(Args)]
struct PhoneticsArgs {
    #[arg(long, conflicts_with = "word")]
    pairs: Option<PathBuf>,
    #[arg(long)]
    wordnet: Option<PathBuf>,
    #[arg(long)]
    word: Option<String>,
    /// Feature table TSV; the bundled Devanagari table by default.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct AlignArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    dictionary: PathBuf,
    /// Where to write the mapped source table.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    no_unit_normalize: bool,
    #[arg(long)]
    no_center: bool,
    #[arg(long)]
    no_renormalize: bool,
}

#[derive(Subcommand)]
enum GazeCommand {
    /// Raw per-trial features as TSV.
    Extract(GazeArgs),
    /// Per-participant fixation time per word, cognates against false friends.
    Analyze(GazeArgs),
    /// Choose the best k features by ANOVA ranking and cross-validated logistic regression.
    Select {
        #[command(flatten)]
        gaze: GazeArgs,
        /// Candidate k values; 1 to 18 by default.
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
    },
}

#[derive(Args)]
struct GazeArgs {
    #[arg(long, num_args = 1..)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    trial_map: Option<PathBuf>,
    /// Pairs file supplying labels.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    min_fixation_ms: Option<u64>,
    /// Measure saccade amplitude in pixels instead of milliseconds.
    #[arg(long)]
    spatial_amplitude: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Logreg,
    LinearSvm,
    FfnnClassifier,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Logreg => ModelKind::Logreg,
            ModelArg::LinearSvm => ModelKind::LinearSvm,
            ModelArg::FfnnClassifier => ModelKind::FfnnClassifier,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    D1,
    D2,
    #[value(name = "d1+d2")]
    D1D2,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    feature_set: String,
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "d1+d2")]
    dataset: DatasetArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json written by `evaluate`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COGNATE_LOG", "warn"))
        .format(|buf, record| {
            let line = json!({
                "ts": buf.timestamp_millis().to_string(),
                "level": record.level().as_str(),
                "target": record.target(),
                "msg": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        })
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let Some(path) = &cli.config else {
        bail!("this command needs --config");
    };
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn optional_config(cli: &Cli) -> Result<Option<ExperimentConfig>> {
    cli.config.is_some().then(|| load_config(cli)).transpose()
}

fn print(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Ingest(a) => ingest(&cli, a)?,
        Command::Lexsim(a) => lexsim_cmd(&cli, a)?,
        Command::Phonetics(a) => phonetics_cmd(&cli, a)?,
        Command::Align(a) => align(a)?,
        Command::Gaze(g) => gaze_cmd(&cli, g)?,
        Command::Train(a) => train_cmd(&cli, a)?,
        Command::PredictGaze => predict_gaze(&cli)?,
        Command::Evaluate => return evaluate(&cli),
        Command::Report(a) => report(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn load_pairs(path: Option<&PathBuf>, wordnet: Option<&PathBuf>, cfg: Option<&ExperimentConfig>) -> Result<(Dataset, serde_json::Value)> {
    let columns = cfg.map_or_else(ColumnSpec::default, |c| c.data.columns);
    let path = path
        .or(cfg.map(|c| &c.data.pairs))
        .context("a pairs file is required (--pairs or --config)")?;
    let ds = corpus::load_cognate_pairs(path, &columns)?;
    let wordnet = wordnet.or(cfg.and_then(|c| c.data.wordnet.as_ref()));
    match wordnet {
        Some(w) => {
            let (ds, rep) = corpus::attach_context(ds, w)?;
            let info = json!({"matched": rep.matched, "total": rep.total, "coverage": rep.coverage(), "duplicate_synsets": rep.duplicate_synsets});
            Ok((ds, info))
        }
        None => Ok((ds, serde_json::Value::Null)),
    }
}

fn counts(ds: &Dataset) -> serde_json::Value {
    let c = ds.counts();
    json!({"1": c.cognates, "0": c.false_friends})
}

fn ingest(cli: &Cli, a: &IngestArgs) -> Result<()> {
    let cfg = optional_config(cli)?;
    let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let (ds, context) = load_pairs(a.pairs.as_ref(), a.wordnet.as_ref(), cfg.as_ref())?;
    let mut summary = json!({"pairs": ds.len(), "counts": counts(&ds), "context": context});
    let balance = a.balance || cfg.as_ref().is_some_and(|c| c.data.balance);
    let working = if balance { corpus::balance_dataset(&ds, seed)? } else { ds };
    if balance {
        summary["balanced"] = counts(&working);
    }
    let mut outputs = vec![("pairs.tsv", working.clone())];
    if let Some(n) = a.gaze_subset_n.or(cfg.as_ref().and_then(|c| c.data.gaze_subset_n)) {
        let (sub, rest) = corpus::split_gaze_subset(&working, n, seed)?;
        summary["gaze_subset"] = counts(&sub);
        summary["remainder"] = counts(&rest);
        outputs.push(("gaze_subset.tsv", sub));
        outputs.push(("remainder.tsv", rest));
    }
    if let Some(dir) = &cli.out {
        for (name, ds) in &outputs {
            write_file(&dir.join(name), &corpus::pairs_tsv(ds))?;
        }
    }
    print(&summary)
}

fn lexsim_cmd(cli: &Cli, a: &LexsimArgs) -> Result<()> {
    let words: Vec<(String, String)> = match (&a.source, &a.target) {
        (Some(s), Some(t)) => vec![(s.clone(), t.clone())],
        _ => {
            let cfg = optional_config(cli)?;
            let (ds, _) = load_pairs(a.pairs.as_ref(), None, cfg.as_ref())?;
            ds.pairs.into_iter().map(|p| (p.source_word, p.target_word)).collect()
        }
    };
    let mut out = String::from("source\ttarget\tlevenshtein\tned\tqgram_distance\twls\n");
    for (s, t) in words {
        let sc = lexsim::lexical_scores(&s, &t, a.q, a.alpha)?;
        out.push_str(&format!("{s}\t{t}\t{}\t{}\t{}\t{}\n", sc.levenshtein, sc.ned, sc.qgram_distance, sc.wls));
    }
    print!("{out}");
    Ok(())
}

fn phonetics_cmd(cli: &Cli, a: &PhoneticsArgs) -> Result<()> {
    let table = match &a.table {
        Some(p) => PhoneticTable::load(p)?,
        None => PhoneticTable::builtin(),
    };
    if let Some(w) = &a.word {
        let v = avg_phonetic_vector(w, &table);
        return print(&json!({"word": w, "features": table.feature_names(), "vector": v.values, "unknown": v.unknown}));
    }
    let cfg = optional_config(cli)?;
    let (ds, _) = load_pairs(a.pairs.as_ref(), a.wordnet.as_ref(), cfg.as_ref())?;
    for p in &ds.pairs {
        let f = phonetic_pair_features(p, ds.clues_for(p), &table);
        println!(
            "{}",
            json!({"source": p.source_word, "target": p.target_word, "synset_id": p.synset_id,
                   "pv_s": f.pv_s.values, "pv_t": f.pv_t.values, "pcv_s": f.pcv_s.values, "pcv_t": f.pcv_t.values})
        );
    }
    Ok(())
}

fn align(a: &AlignArgs) -> Result<()> {
    let (source, _) = xling::load_embeddings(&a.source)?;
    let (target, _) = xling::load_embeddings(&a.target)?;
    let dict = xling::load_dictionary(&a.dictionary)?;
    let (x, z, used) = xling::dictionary_matrices(&source, &target, &dict)?;
    let opts = AlignOptions {
        unit_normalize: !a.no_unit_normalize,
        center: !a.no_center,
        renormalize: !a.no_renormalize,
    };
    let map = xling::procrustes_align(&x, &z, &opts)?;
    let mapped = xling::apply_mapping(&source, &map)?;
    xling::save_embeddings(&mapped, &a.output)?;
    print(&json!({
        "dictionary_entries": dict.len(),
        "entries_used": used,
        "dim": map.dim(),
        "orthogonality_error": map.orthogonality_error(),
        "output": a.output,
    }))
}

/// Gaze settings from flags, falling back to the config's `[gaze]` section.
fn gaze_config(g: &GazeArgs, cfg: Option<&ExperimentConfig>) -> Result<GazeConfig> {
    let base = cfg.and_then(|c| c.gaze.clone());
    let reports = if g.reports.is_empty() { base.as_ref().map(|b| b.reports.clone()).unwrap_or_default() } else { g.reports.clone() };
    if reports.is_empty() {
        bail!("no fixation reports given (--reports or a [gaze] section)");
    }
    let trial_map = g
        .trial_map
        .clone()
        .or(base.as_ref().map(|b| b.trial_map.clone()))
        .context("a trial map is required (--trial-map or a [gaze] section)")?;
    Ok(GazeConfig {
        reports,
        trial_map,
        min_fixation_ms: g
            .min_fixation_ms
            .or(base.as_ref().map(|b| b.min_fixation_ms))
            .unwrap_or(DEFAULT_MIN_FIXATION_MS),
        amplitude: if g.spatial_amplitude {
            SaccadeAmplitude::Spatial
        } else {
            base.as_ref().map_or(SaccadeAmplitude::Duration, |b| b.amplitude)
        },
        selected: base.as_ref().map_or_else(|| DEFAULT_SELECTED.to_vec(), |b| b.selected.clone()),
        select_k: None,
        word_count: base.as_ref().map_or(WordCount::IaCount, |b| b.word_count),
    })
}

fn gaze_cmd(cli: &Cli, cmd: &GazeCommand) -> Result<()> {
    let cfg = optional_config(cli)?;
    let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    match cmd {
        GazeCommand::Extract(g) => {
            let gc = gaze_config(g, cfg.as_ref())?;
            let mut events = Vec::new();
            for r in &gc.reports {
                events.extend(gaze::load_fixation_report(r, gc.min_fixation_ms)?.events);
            }
            let trials = gaze::load_trial_map(&gc.trial_map)?;
            let ext = gaze::extract_all(&events, &trials, gc.amplitude, &gc.selected);
            let mut out = format!("participant\ttrial_id\t{}\n", RAW_FEATURE_NAMES.join("\t"));
            for v in &ext.vectors {
                let vals: Vec<String> = v.raw.iter().map(f64::to_string).collect();
                out.push_str(&format!("{}\t{}\t{}\n", v.participant, v.trial_id, vals.join("\t")));
            }
            match &cli.out {
                Some(dir) => write_file(&dir.join("gaze_features.tsv"), &out)?,
                None => print!("{out}"),
            }
            if !ext.excluded.is_empty() {
                log::warn!("{} trials excluded", ext.excluded.len());
            }
        }
        GazeCommand::Analyze(g) => {
            let gc = gaze_config(g, cfg.as_ref())?;
            let (ds, _) = load_pairs(g.pairs.as_ref(), None, cfg.as_ref())?;
            let loaded = pipeline::load_gaze(&gc, &ds, seed)?;
            let csv = gaze::analysis_csv(&loaded.analysis);
            match &cli.out {
                Some(dir) => write_file(&dir.join("gaze_analysis.csv"), &csv)?,
                None => print!("{csv}"),
            }
        }
        GazeCommand::Select { gaze: g, k } => {
            let mut gc = gaze_config(g, cfg.as_ref())?;
            gc.select_k = Some(if k.is_empty() { (1..=RAW_FEATURE_COUNT).collect() } else { k.clone() });
            let (ds, _) = load_pairs(g.pairs.as_ref(), None, cfg.as_ref())?;
            let loaded = pipeline::load_gaze(&gc, &ds, seed)?;
            let sel = loaded.selection.expect("selection requested");
            let names: Vec<&str> = sel.indices.iter().map(|&i| RAW_FEATURE_NAMES[i]).collect();
            print(&json!({"k": sel.k, "indices": sel.indices, "features": names,
                          "accuracy_by_k": sel.accuracy_by_k, "f_scores": sel.f_scores}))?;
        }
    }
    Ok(())
}

fn dataset_kind(d: DatasetArg) -> DatasetKind {
    match d {
        DatasetArg::D1 => DatasetKind::D1,
        DatasetArg::D2 => DatasetKind::D2,
        DatasetArg::D1D2 => DatasetKind::D1D2,
    }
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let mut cfg = load_config(cli)?;
    let kind = dataset_kind(a.dataset);
    if !cfg.datasets.contains(&kind) {
        cfg.datasets.push(kind);
    }
    cfg.feature_sets = vec![a.feature_set.clone()];
    let set = FeatureSet::parse(&a.feature_set, &cfg.embeddings)?;
    let prep = pipeline::prepare(&cfg)?;
    let ds = &prep.datasets[&kind];
    let x = prep.matrix(&cfg, &set, ds)?;
    let y: Vec<u8> = ds.pairs.iter().map(|p| p.label.as_u8()).collect();
    let model_kind = ModelKind::from(a.model);
    let grid = cfg.models.grid(model_kind, cfg.seed);
    let search = grid_search(&grid, &x, &y, cfg.k, cfg.seed, cfg.objective)?;
    let model = train(&x, &y, &search.best.config)?;
    let path = cfg.output_dir.join("model.json");
    fs::create_dir_all(&cfg.output_dir)?;
    model.save(&path)?;
    print(&json!({
        "model": path,
        "best_config": search.best.config.describe(),
        "cv_mean": search.best.mean,
        "n_samples": x.nrows(),
        "n_features": x.ncols(),
    }))
}

fn predict_gaze(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    if cfg.gaze_regressor.is_none() {
        bail!("the config has no [gaze_regressor] section");
    }
    let prep = pipeline::prepare(&cfg)?;
    if let Some(e) = &prep.regressor_error {
        bail!("gaze regressor failed: {e}");
    }
    let predicted: &BTreeMap<String, Vec<f64>> = prep.predicted_gaze.as_ref().expect("regressor ran");
    let names = prep.gaze_summary.as_ref().map(|s| s.selected_features.clone()).unwrap_or_default();
    let mut out = format!("pair_id\t{}\n", names.join("\t"));
    for (key, v) in predicted {
        let vals: Vec<String> = v.iter().map(f64::to_string).collect();
        out.push_str(&format!("{key}\t{}\n", vals.join("\t")));
    }
    write_file(&cfg.output_dir.join("predicted_gaze.tsv"), &out)?;
    write_file(&cfg.output_dir.join("gaze_comparison.csv"), &gaze_comparison_csv(&prep.gaze_comparison)?)?;
    print(&json!({
        "output_dir": cfg.output_dir,
        "pairs": predicted.len(),
        "regressor": prep.gaze_summary.and_then(|s| s.regressor),
    }))
}

fn evaluate(cli: &Cli) -> Result<ExitCode> {
    let cfg = load_config(cli)?;
    let report = pipeline::run_pipeline(&cfg)?;
    let failed: Vec<_> = report
        .failed()
        .map(|r| json!({"dataset": r.dataset, "feature_set": r.feature_set, "model": r.model, "reason": r.reason}))
        .collect();
    for f in &failed {
        log::error!("cell failed: {f}");
    }
    print(&json!({
        "output_dir": cfg.output_dir,
        "rows": report.rows.len(),
        "failed": failed,
        "config_hash": report.config_hash,
    }))?;
    Ok(if report.all_ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn report(a: &ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let report: EvalReport = serde_json::from_str(&text)?;
    match a.format {
        Format::Json => println!("{}", report.to_json()?),
        Format::Csv => print!("{}", report_csv(&report)?),
    }
    Ok(())
}
