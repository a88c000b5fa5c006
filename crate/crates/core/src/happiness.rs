//! Per-user visual (smile) and textual (caption) happiness means.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::faceclient::FaceObservation;
use crate::sentiment::Analyzer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum HappinessError {
    #[error("no {0} to average over")]
    Empty(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HappinessScores {
    pub visual: f64,
    pub textual: f64,
    pub face_count: usize,
    pub caption_count: usize,
    pub period: Option<(DateTime<Utc>, DateTime<Utc>)>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n, mut lo, mut hi) = (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        sum += v;
        n += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    // rounding may push the mean a hair outside the inputs' range
    (n > 0).then(|| (sum / n as f64).clamp(lo, hi))
}

/// Mean smiling confidence over the user's faces.
pub fn visual_happiness(user_faces: &[FaceObservation]) -> Result<f64, HappinessError> {
    mean(user_faces.iter().map(|f| f.smiling)).ok_or(HappinessError::Empty("faces"))
}

/// Mean compound score over all captions, empty captions included.
pub fn textual_happiness<S: AsRef<str>>(captions: &[S], analyzer: &Analyzer) -> Result<f64, HappinessError> {
    mean(captions.iter().map(|c| analyzer.compound(c.as_ref()))).ok_or(HappinessError::Empty("captions"))
}

/// Mean of already-computed compound scores.
pub fn mean_score(scores: &[f64]) -> Result<f64, HappinessError> {
    mean(scores.iter().copied()).ok_or(HappinessError::Empty("scores"))
}

pub fn happiness_scores<S: AsRef<str>>(
    user_faces: &[FaceObservation],
    captions: &[S],
    analyzer: &Analyzer,
    period: Option<(DateTime<Utc>, DateTime<Utc>)>,
) -> Result<HappinessScores, HappinessError> {
    Ok(HappinessScores {
        visual: visual_happiness(user_faces)?,
        textual: textual_happiness(captions, analyzer)?,
        face_count: user_faces.len(),
        caption_count: captions.len(),
        period,
    })
}
