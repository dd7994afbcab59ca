//! Threshold selection against labeled data.
//!
//! Each candidate threshold is scored twice. Strict scoring compares flags
//! and labels sample by sample. Tolerant scoring additionally excuses
//! predicted samples within `WS - 1` of a labeled sample, since marking whole
//! windows widens every detection by up to that much on each side.

use serde::{Deserialize, Serialize};

use crate::detector::{inefficiency_series, mask_from_stats, DetectorConfig, NoiseMask};
use crate::error::{Error, Result};
use crate::synth::LabelSet;
use crate::trace::PositionTrace;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub counts: ScoreCounts,
    /// 1 when nothing is predicted.
    pub precision: f64,
    /// 1 when nothing is labeled.
    pub recall: f64,
    /// 0 when precision and recall are both 0.
    pub f1: f64,
}

impl Score {
    pub fn from_counts(counts: ScoreCounts) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(counts.tp, counts.tp + counts.fp);
        let recall = ratio(counts.tp, counts.tp + counts.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            counts,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub predicted_positive: usize,
    pub strict: Score,
    pub tolerant: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub window_size: usize,
    pub rows: Vec<SweepRow>,
    /// Highest tolerant F1; ties go to the larger threshold.
    pub best_threshold: f64,
}

impl SweepResult {
    pub fn best_row(&self) -> &SweepRow {
        self.rows
            .iter()
            .find(|r| r.threshold == self.best_threshold)
            .expect("best threshold is one of the rows")
    }
}

/// Distance from each sample to the nearest labeled sample (`usize::MAX` if
/// there is none).
fn distance_to_label(labels: &[bool]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; labels.len()];
    let mut last = None;
    for (i, &l) in labels.iter().enumerate() {
        if l {
            last = Some(i);
        }
        if let Some(j) = last {
            dist[i] = i - j;
        }
    }
    let mut next = None;
    for (i, &l) in labels.iter().enumerate().rev() {
        if l {
            next = Some(i);
        }
        if let Some(j) = next {
            dist[i] = dist[i].min(j - i);
        }
    }
    dist
}

/// Scores `mask` against `labels`, returning `(strict, tolerant)` counts.
pub fn score_mask(
    mask: &NoiseMask,
    labels: &LabelSet,
    tolerance: usize,
) -> Result<(ScoreCounts, ScoreCounts)> {
    if mask.len() != labels.len() {
        return Err(Error::Input(format!(
            "mask has {} samples but labels have {}",
            mask.len(),
            labels.len()
        )));
    }
    let dist = distance_to_label(labels.labels());
    Ok(score_with_distances(mask, labels, &dist, tolerance))
}

fn score_with_distances(
    mask: &NoiseMask,
    labels: &LabelSet,
    dist: &[usize],
    tolerance: usize,
) -> (ScoreCounts, ScoreCounts) {
    let mut strict = ScoreCounts::default();
    let mut tolerant = ScoreCounts::default();
    for ((&pred, &truth), &d) in mask.flags().iter().zip(labels.labels()).zip(dist) {
        match (pred, truth) {
            (true, true) => {
                strict.tp += 1;
                tolerant.tp += 1;
            }
            (false, true) => {
                strict.fn_ += 1;
                tolerant.fn_ += 1;
            }
            (true, false) => {
                strict.fp += 1;
                if d <= tolerance {
                    tolerant.tn += 1;
                } else {
                    tolerant.fp += 1;
                }
            }
            (false, false) => {
                strict.tn += 1;
                tolerant.tn += 1;
            }
        }
    }
    (strict, tolerant)
}

/// Runs detection at every threshold and scores it against `labels`.
///
/// Only the sample rate and window size of `config` are used; its threshold
/// is ignored.
pub fn sweep(
    trace: &PositionTrace,
    labels: &LabelSet,
    config: &DetectorConfig,
    thresholds: &[f64],
) -> Result<SweepResult> {
    if thresholds.is_empty() {
        return Err(Error::Config("threshold list is empty".into()));
    }
    if let Some(t) = thresholds.iter().find(|t| t.is_nan() || **t <= 0.0) {
        return Err(Error::Config(format!(
            "thresholds must be positive, got {t}"
        )));
    }
    if labels.len() != trace.len() {
        return Err(Error::Input(format!(
            "trace has {} samples but labels have {}",
            trace.len(),
            labels.len()
        )));
    }
    let ws = config.window_size();
    let stats = inefficiency_series(trace, config)?;
    let dist = distance_to_label(labels.labels());

    let rows: Vec<SweepRow> = thresholds
        .iter()
        .map(|&threshold| {
            let mask = mask_from_stats(&stats, trace.len(), ws, threshold);
            let (strict, tolerant) = score_with_distances(&mask, labels, &dist, ws - 1);
            SweepRow {
                threshold,
                predicted_positive: mask.flagged_count(),
                strict: Score::from_counts(strict),
                tolerant: Score::from_counts(tolerant),
            }
        })
        .collect();

    let best_threshold = rows
        .iter()
        .max_by(|a, b| {
            a.tolerant
                .f1
                .total_cmp(&b.tolerant.f1)
                .then(a.threshold.total_cmp(&b.threshold))
        })
        .map(|r| r.threshold)
        .expect("non-empty");
    Ok(SweepResult {
        window_size: ws,
        rows,
        best_threshold,
    })
}

/// Parses `lo:hi:step` into the inclusive list `lo, lo + step, ..., <= hi`.
pub fn parse_threshold_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(Error::Config(format!(
            "threshold range '{s}' is not lo:hi:step"
        )));
    };
    let parse = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::Config(format!("'{v}' in threshold range is not a number")))
    };
    let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && lo > 0.0 && hi >= lo)
    {
        return Err(Error::Config(format!(
            "threshold range '{s}' needs 0 < lo <= hi and step > 0"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}
