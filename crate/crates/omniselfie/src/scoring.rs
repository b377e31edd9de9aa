//! Expression scores and happiest-frame selection.
//!
//! Every face in a frame carries a 7-way expression distribution; the frame's
//! happiness is scored as `H = M - c V`, with `M` the mean and `V` the
//! population variance of the members' happy scores. High mean alone is not
//! enough: the variance term penalizes frames where one person grins while
//! another looks away.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from score validation and frame selection.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    /// A probability left `[0, 1]`.
    #[error("expression score {name} = {value} outside [0, 1]")]
    ScoreOutOfRange { name: &'static str, value: f64 },
    /// The seven scores should sum to 1 (within tolerance).
    #[error("expression scores sum to {0}, expected 1 within 0.01")]
    UnnormalizedScores(f64),
    /// A frame needs at least one face to be scored.
    #[error("cannot score a frame with no faces")]
    NoFaces,
    /// Selection needs at least one frame.
    #[error("cannot select from an empty frame list")]
    NoFrames,
}

/// A 7-way facial expression distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpressionScores {
    pub angry: f64,
    pub disgust: f64,
    pub fear: f64,
    pub happy: f64,
    pub sad: f64,
    pub surprise: f64,
    pub neutral: f64,
}

impl ExpressionScores {
    pub fn sum(&self) -> f64 {
        self.angry + self.disgust + self.fear + self.happy + self.sad + self.surprise + self.neutral
    }

    /// Checks each score is a probability and the total is 1 within 0.01.
    pub fn validate(&self) -> Result<(), ScoringError> {
        for (name, value) in [
            ("angry", self.angry),
            ("disgust", self.disgust),
            ("fear", self.fear),
            ("happy", self.happy),
            ("sad", self.sad),
            ("surprise", self.surprise),
            ("neutral", self.neutral),
        ] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(ScoringError::ScoreOutOfRange { name, value });
            }
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > 0.01 {
            return Err(ScoringError::UnnormalizedScores(sum));
        }
        Ok(())
    }
}

/// Happiness statistics of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: usize,
    /// Mean of the members' happy scores.
    pub mean: f64,
    /// Population variance of the members' happy scores.
    pub variance: f64,
    /// `mean - c * variance`.
    pub happiness: f64,
}

/// Scores one frame from its members' happy values: returns
/// `(mean, variance, happiness)` with `happiness = mean - c * variance` and
/// the variance taken over the population (divide by n, not n - 1).
pub fn frame_happiness(happy_values: &[f64], c: f64) -> Result<(f64, f64, f64), ScoringError> {
    if happy_values.is_empty() {
        return Err(ScoringError::NoFaces);
    }
    let n = happy_values.len() as f64;
    let mean = happy_values.iter().sum::<f64>() / n;
    let variance = happy_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, variance, mean - c * variance))
}

/// The frame with the highest happiness; ties go to the earliest frame, and
/// generally to the lowest `frame_index` since the input need not be sorted.
pub fn select_best_frame(scores: &[FrameScore]) -> Result<usize, ScoringError> {
    scores
        .iter()
        .min_by(|a, b| {
            b.happiness
                .partial_cmp(&a.happiness)
                .expect("happiness scores are finite")
                .then(a.frame_index.cmp(&b.frame_index))
        })
        .map(|s| s.frame_index)
        .ok_or(ScoringError::NoFrames)
}

/// The baseline selector from the evaluation: first restrict to frames whose
/// raw detection count equals the mode over the sequence (ties between
/// equally common counts go to the larger count), then pick the happiest of
/// those (ties to the earliest). Face identity and track cleaning play no
/// part; `happy_values_per_frame[f]` are the raw per-face happy scores.
pub fn baseline_select(
    detection_counts: &[usize],
    happy_values_per_frame: &[Vec<f64>],
    c: f64,
) -> Result<(usize, usize, Vec<usize>), ScoringError> {
    if detection_counts.is_empty() {
        return Err(ScoringError::NoFrames);
    }
    assert_eq!(
        detection_counts.len(),
        happy_values_per_frame.len(),
        "one happy list per counted frame"
    );
    let mut freq: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for &count in detection_counts {
        *freq.entry(count).or_insert(0) += 1;
    }
    // Highest frequency; equally common counts resolve to the larger count.
    // BTreeMap iterates ascending, so >= keeps the later (larger) key.
    let mode = freq
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
        .map(|(&count, _)| count)
        .expect("nonempty counts");
    let candidates: Vec<usize> = (0..detection_counts.len())
        .filter(|&f| detection_counts[f] == mode)
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for &f in &candidates {
        let (.., h) = frame_happiness(&happy_values_per_frame[f], c)?;
        match best {
            Some((_, best_h)) if h <= best_h => {}
            _ => best = Some((f, h)),
        }
    }
    let (selected, _) = best.expect("candidates are nonempty by construction of the mode");
    Ok((selected, mode, candidates))
}
