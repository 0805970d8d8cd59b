use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::stats::{welch_from_summaries, SampleSummary, WelchResult};

/// One trial's input to the fixation-duration comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDuration {
    pub participant: String,
    pub label: Label,
    pub total_fixation_ms: f64,
    /// Normaliser, normally the number of interest areas on screen.
    pub word_count: f64,
}

impl TrialDuration {
    /// Fixation time per word, in seconds.
    pub fn per_word_seconds(&self) -> f64 {
        self.total_fixation_ms / 1000.0 / self.word_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGazeStats {
    pub participant: String,
    pub mean_pos: f64,
    pub var_pos: f64,
    pub n_pos: usize,
    pub mean_neg: f64,
    pub var_neg: f64,
    pub n_neg: usize,
}

impl ClassGazeStats {
    pub fn welch(&self) -> Result<WelchResult> {
        welch_from_summaries(
            &SampleSummary {
                mean: self.mean_pos,
                variance: self.var_pos,
                n: self.n_pos,
            },
            &SampleSummary {
                mean: self.mean_neg,
                variance: self.var_neg,
                n: self.n_neg,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub stats: ClassGazeStats,
    pub test: WelchResult,
}

#[derive(Debug)]
pub struct ParticipantAnalysis {
    pub participant: String,
    pub outcome: Result<AnalysisRow>,
}

/// Per participant, compare per-word fixation time of cognates (positive)
/// against false friends with a two-tailed Welch t-test.
pub fn fixation_duration_analysis(trials: &[TrialDuration]) -> Vec<ParticipantAnalysis> {
    let mut groups: BTreeMap<&str, [Vec<f64>; 2]> = BTreeMap::new();
    for t in trials {
        groups.entry(&t.participant).or_default()[t.label.as_u8() as usize].push(t.per_word_seconds());
    }
    groups
        .into_iter()
        .map(|(p, [neg, pos])| {
            let outcome = (|| {
                if pos.len() < 2 || neg.len() < 2 {
                    return Err(Error::InsufficientData(format!(
                        "participant {p} has {} cognate and {} false-friend trials, need 2 of each",
                        pos.len(),
                        neg.len()
                    )));
                }
                let (sp, sn) = (SampleSummary::of(&pos), SampleSummary::of(&neg));
                let stats = ClassGazeStats {
                    participant: p.to_owned(),
                    mean_pos: sp.mean,
                    var_pos: sp.variance,
                    n_pos: sp.n,
                    mean_neg: sn.mean,
                    var_neg: sn.variance,
                    n_neg: sn.n,
                };
                let test = welch_from_summaries(&sp, &sn)?;
                Ok(AnalysisRow { stats, test })
            })();
            ParticipantAnalysis {
                participant: p.to_owned(),
                outcome,
            }
        })
        .collect()
}

pub const ANALYSIS_CSV_HEADER: &str = "participant,mean_pos,var_pos,mean_neg,var_neg,t,df,p";

/// Successful rows only, one per participant.
pub fn analysis_csv(rows: &[ParticipantAnalysis]) -> String {
    let mut out = String::from(ANALYSIS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        if let Ok(AnalysisRow { stats: s, test }) = &r.outcome {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.participant, s.mean_pos, s.var_pos, s.mean_neg, s.var_neg, test.t, test.df, test.p
            );
        }
    }
    out
}
