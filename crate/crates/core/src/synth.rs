//! Deterministic synthetic gaze traces with labeled noise bursts.
//!
//! The clean signal is a sequence of fixations joined by linear ramps, with
//! optional Gaussian jitter on fixation samples. Noise is injected as
//! two-state telegraph switching between the true position and the true
//! position plus a fixed offset. All randomness comes from a seeded ChaCha8
//! generator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::PositionTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub position: f64,
    pub dwell_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Visited in order, cycling back to the first until the duration is filled.
    pub fixations: Vec<Fixation>,
    /// Length of the linear ramp between consecutive fixations.
    pub saccade_duration_s: f64,
    pub jitter_sd: f64,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.sample_rate_hz) {
            return Err(Error::Config(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if !positive(self.duration_s) {
            return Err(Error::Config(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if self.fixations.is_empty() {
            return Err(Error::Config("at least one fixation is required".into()));
        }
        if let Some(f) = self
            .fixations
            .iter()
            .find(|f| !positive(f.dwell_s) || !f.position.is_finite())
        {
            return Err(Error::Config(format!("invalid fixation {f:?}")));
        }
        if !(self.saccade_duration_s.is_finite() && self.saccade_duration_s >= 0.0) {
            return Err(Error::Config(format!(
                "saccade duration must be non-negative, got {}",
                self.saccade_duration_s
            )));
        }
        if !(self.jitter_sd.is_finite() && self.jitter_sd >= 0.0) {
            return Err(Error::Config(format!(
                "jitter must be non-negative, got {}",
                self.jitter_sd
            )));
        }
        Ok(())
    }

    fn samples(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate_hz).round() as usize
    }
}

/// Generates the clean trace described by `spec`.
pub fn generate(spec: &SynthSpec) -> Result<PositionTrace> {
    spec.validate()?;
    let total = spec.samples(spec.duration_s);
    let first_dwell = spec.samples(spec.fixations[0].dwell_s);
    if first_dwell == 0 {
        return Err(Error::Config(
            "fixation dwell is shorter than one sample".into(),
        ));
    }
    if total < first_dwell {
        return Err(Error::Config(format!(
            "duration of {total} samples is shorter than the first fixation ({first_dwell} samples)"
        )));
    }
    let ramp = spec.samples(spec.saccade_duration_s);
    let jitter = (spec.jitter_sd > 0.0)
        .then(|| Normal::new(0.0, spec.jitter_sd))
        .transpose()
        .map_err(|e| Error::Config(format!("jitter: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut out = Vec::with_capacity(total);
    let count = spec.fixations.len();
    let mut k = 0;
    while out.len() < total {
        let fix = spec.fixations[k % count];
        let dwell = spec.samples(fix.dwell_s).max(1);
        for _ in 0..dwell.min(total - out.len()) {
            let noise = jitter.as_ref().map_or(0.0, |n| n.sample(&mut rng));
            out.push(fix.position + noise);
        }
        if count > 1 {
            let next = spec.fixations[(k + 1) % count].position;
            for i in 0..ramp.min(total - out.len()) {
                let frac = (i + 1) as f64 / (ramp + 1) as f64;
                out.push(fix.position + (next - fix.position) * frac);
            }
        }
        k += 1;
    }
    PositionTrace::from_values(out, spec.sample_rate_hz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseInjection {
    /// Inclusive `(start, end)` sample ranges.
    pub intervals: Vec<(usize, usize)>,
    /// Displacement of the false position from the true one.
    pub offset: f64,
    /// Per-sample probability of switching between true and false position.
    pub switch_probability: f64,
    /// Per-sample probability of a dropped sample inside an interval.
    pub missing_probability: f64,
}

impl NoiseInjection {
    pub fn new(intervals: Vec<(usize, usize)>, offset: f64, switch_probability: f64) -> Self {
        Self {
            intervals,
            offset,
            switch_probability,
            missing_probability: 0.0,
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        if !self.offset.is_finite() {
            return Err(Error::Config(format!(
                "offset must be finite, got {}",
                self.offset
            )));
        }
        let p = self.switch_probability;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!(
                "switch probability must be in (0, 1], got {p}"
            )));
        }
        let q = self.missing_probability;
        if !(0.0..1.0).contains(&q) {
            return Err(Error::Config(format!(
                "missing probability must be in [0, 1), got {q}"
            )));
        }
        let mut sorted = self.intervals.clone();
        sorted.sort_unstable();
        for &(a, b) in &sorted {
            if a > b || b >= len {
                return Err(Error::Input(format!(
                    "interval ({a}, {b}) is invalid for a trace of length {len}"
                )));
            }
        }
        if let Some(w) = sorted.windows(2).find(|w| w[1].0 <= w[0].1) {
            return Err(Error::Input(format!(
                "intervals {:?} and {:?} overlap",
                w[0], w[1]
            )));
        }
        Ok(())
    }
}

/// Per-sample ground truth: `true` inside an injected interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: Vec<bool>,
}

impl LabelSet {
    pub fn from_labels(labels: Vec<bool>) -> Self {
        Self { labels }
    }

    pub fn from_intervals(len: usize, intervals: &[(usize, usize)]) -> Self {
        let mut labels = vec![false; len];
        for &(a, b) in intervals {
            labels[a..=b.min(len.saturating_sub(1))].fill(true);
        }
        Self { labels }
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Maximal runs of labeled samples, inclusive.
    pub fn intervals(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, &l) in self.labels.iter().enumerate() {
            match (l, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, self.labels.len() - 1));
        }
        out
    }
}

/// Injects telegraph noise into each interval of `inj`.
///
/// Each interval starts at the false position; every following sample
/// switches state with probability `switch_probability`. Samples outside the
/// intervals are untouched.
pub fn inject(
    trace: &PositionTrace,
    inj: &NoiseInjection,
    seed: u64,
) -> Result<(PositionTrace, LabelSet)> {
    inj.validate(trace.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = trace.raw().to_vec();
    let mut intervals = inj.intervals.clone();
    intervals.sort_unstable();
    for &(a, b) in &intervals {
        let mut at_false = true;
        for (i, v) in values.iter_mut().enumerate().take(b + 1).skip(a) {
            if i > a && rng.random_bool(inj.switch_probability) {
                at_false = !at_false;
            }
            if at_false {
                *v += inj.offset;
            }
            if inj.missing_probability > 0.0 && rng.random_bool(inj.missing_probability) {
                *v = f64::NAN;
            }
        }
    }
    let noisy = PositionTrace::from_values(values, trace.sample_rate_hz())?
        .with_channel(trace.channel())
        .with_unit(trace.unit_label());
    Ok((noisy, LabelSet::from_intervals(trace.len(), &intervals)))
}
