//! Eye-tracking: fixation reports, saccades, per-trial features, feature
//! selection, participant averaging and the per-word fixation-time test.

mod analysis;
mod features;
mod report;
mod select;

pub use analysis::{
    analysis_csv, fixation_duration_analysis, AnalysisRow, ClassGazeStats, ParticipantAnalysis, TrialDuration,
    ANALYSIS_CSV_HEADER,
};
pub use features::{
    average_by_trial, average_over_participants, extract_all, extract_trial, run_count, trial_feature_vector,
    AveragedGaze, ExcludedTrial, GazeExtraction, SaccadeAmplitude, TrialGazeVector, DEFAULT_SELECTED,
    RAW_FEATURE_COUNT, RAW_FEATURE_NAMES,
};
pub use report::{
    derive_saccades, group_trials, load_fixation_report, load_trial_map, parse_fixation_report, parse_trial_map,
    FixationEvent, FixationReport, SaccadeEvent, TrialInfo, DEFAULT_MIN_FIXATION_MS,
};
pub use select::{rank_features, select_k_best, FeatureSelection, SELECTION_FOLDS};
