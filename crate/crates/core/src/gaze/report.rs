use std::collections::BTreeMap;
use std::path::Path;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{data_lines, read_to_string};
use crate::error::{Error, Result};

/// Fixations shorter than this are discarded by default.
pub const DEFAULT_MIN_FIXATION_MS: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationEvent {
    pub participant: String,
    pub trial_id: String,
    /// 0 means outside every interest area.
    pub ia_index: u32,
    pub start_ms: u64,
    pub end_ms: u64,
    pub x: f64,
    pub y: f64,
    pub pupil: f64,
}

impl FixationEvent {
    pub fn duration_ms(&self) -> u64 {
        self.end_ms - self.start_ms
    }

    pub fn in_interest_area(&self) -> bool {
        self.ia_index > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaccadeEvent {
    pub participant: String,
    pub trial_id: String,
    pub from_ia: u32,
    pub to_ia: u32,
    /// Gap between the end of one fixation and the start of the next.
    pub duration_ms: u64,
    /// Euclidean distance between the two fixation positions, in pixels.
    pub amplitude_px: f64,
    pub is_regression: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixationReport {
    pub events: Vec<FixationEvent>,
    /// Rows dropped for being shorter than the minimum duration.
    pub dropped_short: usize,
}

impl FixationReport {
    /// Events grouped by `(participant, trial_id)`, each group ordered by start time.
    pub fn trials(&self) -> BTreeMap<(String, String), Vec<FixationEvent>> {
        group_trials(&self.events)
    }
}

pub fn group_trials(events: &[FixationEvent]) -> BTreeMap<(String, String), Vec<FixationEvent>> {
    let mut out: BTreeMap<(String, String), Vec<FixationEvent>> = BTreeMap::new();
    for e in events {
        out.entry((e.participant.clone(), e.trial_id.clone()))
            .or_default()
            .push(e.clone());
    }
    for v in out.values_mut() {
        v.sort_by_key(|e| (e.start_ms, e.end_ms));
    }
    out
}

pub fn load_fixation_report(path: impl AsRef<Path>, min_duration_ms: u64) -> Result<FixationReport> {
    let path = path.as_ref();
    parse_fixation_report(&read_to_string(path)?, &path.display().to_string(), min_duration_ms)
}

/// Parse a TSV with columns
/// `participant, trial_id, ia_index, start_ms, end_ms, x, y, pupil`.
/// An optional header row starting with `participant` is skipped.
pub fn parse_fixation_report(text: &str, file: &str, min_duration_ms: u64) -> Result<FixationReport> {
    let mut report = FixationReport::default();
    let mut first = true;
    for (line, row) in data_lines(text) {
        let f: Vec<&str> = row.split('\t').map(str::trim).collect();
        if std::mem::take(&mut first) && f[0].eq_ignore_ascii_case("participant") {
            continue;
        }
        if f.len() != 8 {
            return Err(Error::parse(file, line, format!("expected 8 columns, found {}", f.len())));
        }
        let int = |i: usize, name: &str| -> Result<u64> {
            f[i].parse()
                .map_err(|_| Error::parse(file, line, format!("{name} {:?} is not a non-negative integer", f[i])))
        };
        let real = |i: usize, name: &str| -> Result<f64> {
            match f[i].parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::parse(file, line, format!("{name} {:?} is not a finite number", f[i]))),
            }
        };
        if f[0].is_empty() || f[1].is_empty() {
            return Err(Error::parse(file, line, "empty participant or trial id"));
        }
        let ia_index = u32::try_from(int(2, "ia_index")?)
            .map_err(|_| Error::parse(file, line, "ia_index out of range"))?;
        let (start_ms, end_ms) = (int(3, "start_ms")?, int(4, "end_ms")?);
        if end_ms <= start_ms {
            return Err(Error::parse(file, line, format!("end_ms {end_ms} must exceed start_ms {start_ms}")));
        }
        let pupil = real(7, "pupil")?;
        if pupil < 0.0 {
            return Err(Error::parse(file, line, format!("negative pupil size {pupil}")));
        }
        if end_ms - start_ms < min_duration_ms {
            report.dropped_short += 1;
            continue;
        }
        report.events.push(FixationEvent {
            participant: f[0].to_owned(),
            trial_id: f[1].to_owned(),
            ia_index,
            start_ms,
            end_ms,
            x: real(5, "x")?,
            y: real(6, "y")?,
            pupil,
        });
    }
    if report.dropped_short > 0 {
        debug!("{file}: dropped {} fixations shorter than {min_duration_ms} ms", report.dropped_short);
    }
    Ok(report)
}

/// One saccade between each pair of consecutive fixations.
pub fn derive_saccades(fixations: &[FixationEvent]) -> Result<Vec<SaccadeEvent>> {
    let Some(first) = fixations.first() else {
        return Err(Error::EmptyTrial("(unknown)".into()));
    };
    Ok(fixations
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            if b.start_ms < a.end_ms {
                warn!(
                    "participant {} trial {}: overlapping fixations at {} ms",
                    first.participant, first.trial_id, b.start_ms
                );
            }
            SaccadeEvent {
                participant: a.participant.clone(),
                trial_id: a.trial_id.clone(),
                from_ia: a.ia_index,
                to_ia: b.ia_index,
                duration_ms: b.start_ms.saturating_sub(a.end_ms),
                amplitude_px: (b.x - a.x).hypot(b.y - a.y),
                is_regression: a.ia_index > 0 && b.ia_index > 0 && b.ia_index < a.ia_index,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialInfo {
    pub trial_id: String,
    pub synset_id: u64,
    pub source: String,
    pub target: String,
    pub ia_count: u32,
}

pub fn load_trial_map(path: impl AsRef<Path>) -> Result<BTreeMap<String, TrialInfo>> {
    let path = path.as_ref();
    parse_trial_map(&read_to_string(path)?, &path.display().to_string())
}

/// `trial_id, synset_id, source, target, ia_count`, tab separated.
pub fn parse_trial_map(text: &str, file: &str) -> Result<BTreeMap<String, TrialInfo>> {
    let mut out = BTreeMap::new();
    let mut first = true;
    for (line, row) in data_lines(text) {
        let f: Vec<&str> = row.split('\t').map(str::trim).collect();
        if std::mem::take(&mut first) && f[0].eq_ignore_ascii_case("trial_id") {
            continue;
        }
        if f.len() != 5 {
            return Err(Error::parse(file, line, format!("expected 5 columns, found {}", f.len())));
        }
        let synset_id = f[1]
            .parse()
            .map_err(|_| Error::parse(file, line, format!("synset_id {:?} is not an integer", f[1])))?;
        let ia_count: u32 = f[4]
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| Error::parse(file, line, format!("ia_count {:?} is not a positive integer", f[4])))?;
        let info = TrialInfo {
            trial_id: f[0].to_owned(),
            synset_id,
            source: f[2].to_owned(),
            target: f[3].to_owned(),
            ia_count,
        };
        if out.insert(info.trial_id.clone(), info).is_some() {
            return Err(Error::parse(file, line, format!("duplicate trial id {:?}", f[0])));
        }
    }
    Ok(out)
}
