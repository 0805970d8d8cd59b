use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{derive_saccades, group_trials, FixationEvent, SaccadeEvent, TrialInfo};
use crate::error::{Error, Result};

pub const RAW_FEATURE_COUNT: usize = 18;

/// Column names of the raw per-trial vector, in order. The first eight are
/// the default selection.
pub const RAW_FEATURE_NAMES: [&str; RAW_FEATURE_COUNT] = [
    "avg_fixation_duration",
    "avg_saccade_amplitude",
    "fixation_count",
    "fixation_duration_max",
    "fixation_duration_min",
    "ia_count",
    "run_count",
    "saccade_count",
    "total_fixation_duration",
    "regression_count",
    "progression_count",
    "pupil_mean",
    "pupil_max",
    "pupil_min",
    "first_fixation_duration",
    "total_trial_duration",
    "mean_run_length",
    "mean_dwell_time",
];

pub const DEFAULT_SELECTED: [usize; 8] = [0, 1, 2, 3, 4, 5, 6, 7];

/// How the saccade amplitude column is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaccadeAmplitude {
    /// Gap between fixations in milliseconds.
    #[default]
    Duration,
    /// Distance between fixation positions in pixels.
    Spatial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialGazeVector {
    pub participant: String,
    pub trial_id: String,
    pub raw: Vec<f64>,
    pub selected: Vec<f64>,
}

impl TrialGazeVector {
    pub fn reselect(&mut self, indices: &[usize]) {
        self.selected = indices.iter().map(|&i| self.raw[i]).collect();
    }
}

/// Run count: maximal blocks of consecutive fixations on the same interest area.
pub fn run_count(ias: &[u32]) -> usize {
    ias.iter().enumerate().filter(|&(i, ia)| i == 0 || ias[i - 1] != *ia).count()
}

/// Per-trial raw features from the fixations of one trial and the saccades
/// between them. Fixations outside every interest area only count towards
/// the total trial duration.
pub fn trial_feature_vector(
    fixations: &[FixationEvent],
    saccades: &[SaccadeEvent],
    ia_count_on_screen: u32,
    amplitude: SaccadeAmplitude,
    selected: &[usize],
) -> Result<TrialGazeVector> {
    let Some(any) = fixations.first() else {
        return Err(Error::EmptyTrial("(unknown)".into()));
    };
    let inside: Vec<&FixationEvent> = fixations.iter().filter(|f| f.in_interest_area()).collect();
    if inside.is_empty() {
        return Err(Error::DegenerateTrial(format!("{}/{}", any.participant, any.trial_id)));
    }
    if let Some(&bad) = selected.iter().find(|&&i| i >= RAW_FEATURE_COUNT) {
        return Err(Error::Range(format!("gaze feature index {bad} exceeds {RAW_FEATURE_COUNT}")));
    }
    let durs: Vec<f64> = inside.iter().map(|f| f.duration_ms() as f64).collect();
    let n = durs.len() as f64;
    let total: f64 = durs.iter().sum();
    let ias: Vec<u32> = inside.iter().map(|f| f.ia_index).collect();
    let runs = run_count(&ias) as f64;
    let visited = ias.iter().collect::<BTreeSet<_>>().len() as f64;
    let amplitudes: Vec<f64> = saccades
        .iter()
        .map(|s| match amplitude {
            SaccadeAmplitude::Duration => s.duration_ms as f64,
            SaccadeAmplitude::Spatial => s.amplitude_px,
        })
        .collect();
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let pupils: Vec<f64> = inside.iter().map(|f| f.pupil).collect();
    let lo = durs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = durs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = fixations.iter().map(|f| f.end_ms).max().unwrap_or(0) - fixations.iter().map(|f| f.start_ms).min().unwrap_or(0);
    let raw = vec![
        total / n,
        mean(&amplitudes),
        n,
        hi,
        lo,
        f64::from(ia_count_on_screen),
        runs,
        saccades.len() as f64,
        total,
        saccades.iter().filter(|s| s.is_regression).count() as f64,
        saccades.iter().filter(|s| s.from_ia > 0 && s.to_ia > s.from_ia).count() as f64,
        mean(&pupils),
        pupils.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        pupils.iter().copied().fold(f64::INFINITY, f64::min),
        durs[0],
        span as f64,
        n / runs,
        total / visited,
    ];
    Ok(TrialGazeVector {
        participant: any.participant.clone(),
        trial_id: any.trial_id.clone(),
        selected: selected.iter().map(|&i| raw[i]).collect(),
        raw,
    })
}

/// Features of one trial: saccades are taken between consecutive in-area
/// fixations, so the saccade count is always one less than the fixation count.
pub fn extract_trial(
    fixations: &[FixationEvent],
    ia_count_on_screen: u32,
    amplitude: SaccadeAmplitude,
    selected: &[usize],
) -> Result<TrialGazeVector> {
    let inside: Vec<FixationEvent> = fixations.iter().filter(|f| f.in_interest_area()).cloned().collect();
    let saccades = if inside.is_empty() { Vec::new() } else { derive_saccades(&inside)? };
    trial_feature_vector(fixations, &saccades, ia_count_on_screen, amplitude, selected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedTrial {
    pub participant: String,
    pub trial_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GazeExtraction {
    /// Ordered by `(participant, trial_id)`.
    pub vectors: Vec<TrialGazeVector>,
    pub excluded: Vec<ExcludedTrial>,
}

/// Feature vectors for every `(participant, trial)` present in `events`.
/// Trials missing from the map or without an in-area fixation are excluded and logged.
pub fn extract_all(
    events: &[FixationEvent],
    trials: &BTreeMap<String, TrialInfo>,
    amplitude: SaccadeAmplitude,
    selected: &[usize],
) -> GazeExtraction {
    let groups: Vec<_> = group_trials(events).into_iter().collect();
    let results: Vec<_> = groups
        .par_iter()
        .map(|((_, t), fx)| match trials.get(t) {
            None => Err(format!("trial {t:?} is not in the trial map")),
            Some(info) => extract_trial(fx, info.ia_count, amplitude, selected).map_err(|e| e.to_string()),
        })
        .collect();
    let mut out = GazeExtraction::default();
    for (((p, t), _), r) in groups.into_iter().zip(results) {
        match r {
            Ok(v) => out.vectors.push(v),
            Err(reason) => {
                warn!("excluding participant {p} trial {t}: {reason}");
                out.excluded.push(ExcludedTrial {
                    participant: p,
                    trial_id: t,
                    reason,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedGaze {
    pub values: Vec<f64>,
    pub contributors: usize,
}

/// Elementwise mean over whichever participants recorded the trial.
pub fn average_over_participants<V: AsRef<[f64]>>(vectors: &[V]) -> Result<AveragedGaze> {
    let Some(first) = vectors.first() else {
        return Err(Error::MissingGaze("pair".into()));
    };
    let dim = first.as_ref().len();
    let mut sum = vec![0.0; dim];
    for v in vectors {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: v.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(AveragedGaze {
        values: sum.into_iter().map(|s| s / n).collect(),
        contributors: vectors.len(),
    })
}

/// Selected features averaged across participants for every trial id.
pub fn average_by_trial(vectors: &[TrialGazeVector]) -> BTreeMap<String, AveragedGaze> {
    let mut by_trial: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
    for v in vectors {
        by_trial.entry(&v.trial_id).or_default().push(&v.selected);
    }
    by_trial
        .into_iter()
        .filter_map(|(t, vs)| average_over_participants(&vs).ok().map(|a| (t.to_owned(), a)))
        .collect()
}
