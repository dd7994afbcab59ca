//! Windowed inefficiency metric and batch noise detection.
//!
//! For a window of `WS` consecutive samples, only adjacent pairs with both
//! samples present contribute. Each such pair's difference `d` adds `|d|` to
//! the total distance travelled (TDT) and `d` to the net displacement, whose
//! absolute value is the distance as the crow flies (DATCF). The inefficiency
//! metric is
//!
//! ```text
//! IM = (TDT - DATCF) * 1000 / valid_count
//! ```
//!
//! where `valid_count` is the number of present samples in the window.
//! Windows with fewer than two present samples have `IM = 0`. A window is
//! noisy when `IM > IT` (strictly), and every sample of a noisy window is
//! flagged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::PositionTrace;

/// Computes the default window size, `floor(sample_rate_hz / 20)` (50 ms).
pub fn window_size(sample_rate_hz: f64) -> Result<usize> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Config(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )));
    }
    let ws = (sample_rate_hz / 20.0).floor() as usize;
    if ws < 2 {
        return Err(Error::Config(format!(
            "sample rate {sample_rate_hz} Hz too low for SR/20 windowing \
             (window size {ws} < 2); supply a window size override"
        )));
    }
    Ok(ws)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub sample_rate_hz: f64,
    pub inefficiency_threshold: f64,
    pub window_size_override: Option<usize>,
    window_size: usize,
}

impl DetectorConfig {
    pub fn new(
        sample_rate_hz: f64,
        inefficiency_threshold: f64,
        window_size_override: Option<usize>,
    ) -> Result<Self> {
        if inefficiency_threshold.is_nan() || inefficiency_threshold < 0.0 {
            return Err(Error::Config(format!(
                "inefficiency threshold must be non-negative, got {inefficiency_threshold}"
            )));
        }
        let window_size = match window_size_override {
            Some(ws) => {
                if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
                    return Err(Error::Config(format!(
                        "sample rate must be positive and finite, got {sample_rate_hz}"
                    )));
                }
                if ws < 2 {
                    return Err(Error::Config(format!(
                        "window size override must be at least 2, got {ws}"
                    )));
                }
                ws
            }
            None => window_size(sample_rate_hz)?,
        };
        Ok(Self {
            sample_rate_hz,
            inefficiency_threshold,
            window_size_override,
            window_size,
        })
    }

    /// Effective window size in samples.
    pub fn window_size(&self) -> usize {
        self.window_size
    }

    /// Same window and rate, different threshold.
    pub fn with_threshold(&self, inefficiency_threshold: f64) -> Result<Self> {
        Self::new(
            self.sample_rate_hz,
            inefficiency_threshold,
            self.window_size_override,
        )
    }
}

/// Statistics for the window covering `start_index .. start_index + WS`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub start_index: usize,
    pub tdt: f64,
    pub datcf: f64,
    pub valid_count: usize,
    pub im: f64,
}

/// Reduces the pair differences of one window. Pairs with a missing endpoint
/// must be passed as `0.0`, which leaves both sums bit-for-bit unchanged.
#[inline]
pub(crate) fn reduce_window(
    start_index: usize,
    diffs: impl Iterator<Item = f64>,
    valid_count: usize,
) -> WindowStats {
    if valid_count < 2 {
        return WindowStats {
            start_index,
            tdt: 0.0,
            datcf: 0.0,
            valid_count,
            im: 0.0,
        };
    }
    let mut tdt = 0.0_f64;
    let mut net = 0.0_f64;
    for d in diffs {
        tdt += d.abs();
        net += d;
    }
    let datcf = net.abs();
    let im = ((tdt - datcf) * 1000.0 / valid_count as f64).max(0.0);
    WindowStats {
        start_index,
        tdt,
        datcf,
        valid_count,
        im,
    }
}

/// Difference between `next` and `prev`, or `0.0` if either is missing.
#[inline]
pub(crate) fn pair_difference(prev: f64, next: f64) -> f64 {
    if prev.is_nan() || next.is_nan() {
        0.0
    } else {
        next - prev
    }
}

fn check_window(len: usize, start: usize, ws: usize) -> Result<()> {
    if ws < 2 {
        return Err(Error::Config(format!(
            "window size must be at least 2, got {ws}"
        )));
    }
    if start.checked_add(ws).is_none_or(|end| end > len) {
        return Err(Error::WindowOutOfBounds {
            start,
            window_size: ws,
            len,
        });
    }
    Ok(())
}

/// Statistics of the single window starting at `start_index`.
pub fn window_stats(trace: &PositionTrace, start_index: usize, ws: usize) -> Result<WindowStats> {
    check_window(trace.len(), start_index, ws)?;
    let raw = &trace.raw()[start_index..start_index + ws];
    let valid = raw.iter().filter(|v| !v.is_nan()).count();
    Ok(reduce_window(
        start_index,
        raw.windows(2).map(|p| pair_difference(p[0], p[1])),
        valid,
    ))
}

/// Windows handled per block of pair differences. Keeps the scratch buffer
/// cache-resident regardless of trace length.
const BLOCK: usize = 4096;

/// Visits every window start `0 ..= len - ws` in order.
fn for_each_window(raw: &[f64], ws: usize, mut visit: impl FnMut(WindowStats)) {
    debug_assert!(ws >= 2 && raw.len() >= ws);
    let last_start = raw.len() - ws;
    let mut diffs = Vec::with_capacity(BLOCK + ws);
    let mut valid = raw[..ws].iter().filter(|v| !v.is_nan()).count();
    let mut block_start = 0;
    while block_start <= last_start {
        let block_end = (block_start + BLOCK).min(last_start + 1);
        // Differences for pairs (k, k + 1), k in block_start .. block_end + ws - 2.
        diffs.clear();
        diffs.extend(
            raw[block_start..block_end + ws - 1]
                .windows(2)
                .map(|p| pair_difference(p[0], p[1])),
        );
        for start in block_start..block_end {
            if start > 0 {
                valid += usize::from(!raw[start + ws - 1].is_nan());
                valid -= usize::from(!raw[start - 1].is_nan());
            }
            let local = start - block_start;
            visit(reduce_window(
                start,
                diffs[local..local + ws - 1].iter().copied(),
                valid,
            ));
        }
        block_start = block_end;
    }
}

fn check_length(trace: &PositionTrace, ws: usize) -> Result<()> {
    if trace.len() < ws {
        return Err(Error::Input(format!(
            "trace has {} samples, fewer than the window size {ws}",
            trace.len()
        )));
    }
    Ok(())
}

/// Statistics for every sliding window, one per start index
/// `0 ..= len - WS`, so that the final sample is covered too.
pub fn inefficiency_series(
    trace: &PositionTrace,
    config: &DetectorConfig,
) -> Result<Vec<WindowStats>> {
    let ws = config.window_size();
    check_length(trace, ws)?;
    let mut out = Vec::with_capacity(trace.len() - ws + 1);
    for_each_window(trace.raw(), ws, |w| out.push(w));
    Ok(out)
}

/// Batch detection: flags every sample of every window whose IM exceeds the
/// threshold.
pub fn detect(trace: &PositionTrace, config: &DetectorConfig) -> Result<NoiseMask> {
    let ws = config.window_size();
    check_length(trace, ws)?;
    let threshold = config.inefficiency_threshold;
    let mut marker = MaskBuilder::new(trace.len(), ws);
    for_each_window(trace.raw(), ws, |w| {
        if w.im > threshold {
            marker.mark(w.start_index);
        }
    });
    Ok(marker.finish())
}

/// Like [`detect`], but a trace shorter than the window yields an all-clean
/// mask instead of an error. This matches what a streaming detector reports
/// for a stream that ends before its first window completes.
pub fn detect_lenient(trace: &PositionTrace, config: &DetectorConfig) -> Result<NoiseMask> {
    if trace.len() < config.window_size() {
        return Ok(NoiseMask::clean(trace.len()));
    }
    detect(trace, config)
}

/// Builds a mask from precomputed window statistics, for sweeping many
/// thresholds over one series.
pub fn mask_from_stats(stats: &[WindowStats], len: usize, ws: usize, threshold: f64) -> NoiseMask {
    let mut marker = MaskBuilder::new(len, ws);
    for w in stats {
        if w.im > threshold {
            marker.mark(w.start_index);
        }
    }
    marker.finish()
}

/// Marks whole windows in O(1) amortized per sample. Windows must be marked
/// in increasing start order.
pub(crate) struct MaskBuilder {
    flags: Vec<bool>,
    ws: usize,
    covered_until: usize,
}

impl MaskBuilder {
    pub(crate) fn new(len: usize, ws: usize) -> Self {
        Self {
            flags: vec![false; len],
            ws,
            covered_until: 0,
        }
    }

    pub(crate) fn mark(&mut self, start: usize) {
        let end = (start + self.ws).min(self.flags.len());
        let from = start.max(self.covered_until);
        if from < end {
            self.flags[from..end].fill(true);
        }
        self.covered_until = self.covered_until.max(end);
    }

    pub(crate) fn finish(self) -> NoiseMask {
        NoiseMask { flags: self.flags }
    }
}

/// Per-sample noise flags (`true` = noise), same length as the source trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseMask {
    flags: Vec<bool>,
}

impl NoiseMask {
    pub fn from_flags(flags: Vec<bool>) -> Self {
        Self { flags }
    }

    pub fn clean(len: usize) -> Self {
        Self {
            flags: vec![false; len],
        }
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn into_flags(self) -> Vec<bool> {
        self.flags
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        self.flags.get(index).copied()
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn fraction_flagged(&self) -> f64 {
        if self.flags.is_empty() {
            0.0
        } else {
            self.flagged_count() as f64 / self.flags.len() as f64
        }
    }

    /// Flags a sample if either mask flags it.
    ///
    /// Horizontal and vertical channels are detected independently; this
    /// combination is a convenience on top of the per-channel result.
    pub fn union(&self, other: &NoiseMask) -> Result<NoiseMask> {
        if self.len() != other.len() {
            return Err(Error::Input(format!(
                "cannot combine masks of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(NoiseMask {
            flags: self
                .flags
                .iter()
                .zip(&other.flags)
                .map(|(&a, &b)| a || b)
                .collect(),
        })
    }
}

/// A maximal run of flagged samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSegment {
    /// Inclusive.
    pub start_index: usize,
    /// Inclusive.
    pub end_index: usize,
    pub start_time_s: f64,
    pub end_time_s: f64,
    /// Largest IM among windows overlapping the run.
    pub peak_im: f64,
}

/// Collapses a mask into runs of flagged samples.
///
/// `stats` is the full window series for the same trace (possibly empty, in
/// which case `peak_im` is 0); the window size is recovered from its length.
pub fn mask_to_segments(
    mask: &NoiseMask,
    stats: &[WindowStats],
    sample_rate_hz: f64,
) -> Vec<NoiseSegment> {
    let len = mask.len();
    let ws = (len + 1).saturating_sub(stats.len()).max(1);
    let peak = |a: usize, b: usize| -> f64 {
        let from = a.saturating_sub(ws - 1);
        let to = (b + 1).min(stats.len());
        stats
            .get(from..to)
            .unwrap_or(&[])
            .iter()
            .map(|w| w.im)
            .fold(0.0, f64::max)
    };

    let mut segments = Vec::new();
    let flags = mask.flags();
    let mut i = 0;
    while i < len {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < len && flags[i + 1] {
            i += 1;
        }
        segments.push(NoiseSegment {
            start_index: start,
            end_index: i,
            start_time_s: start as f64 / sample_rate_hz,
            end_time_s: i as f64 / sample_rate_hz,
            peak_im: peak(start, i),
        });
        i += 1;
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(values: &[f64]) -> PositionTrace {
        PositionTrace::from_values(values.to_vec(), 1000.0).unwrap()
    }

    #[test]
    fn window_size_rule() {
        assert_eq!(window_size(1000.0).unwrap(), 50);
        assert_eq!(window_size(500.0).unwrap(), 25);
        assert_eq!(window_size(250.0).unwrap(), 12);
        assert!(window_size(30.0).unwrap_err().is_config());
        assert!(window_size(0.0).is_err());
        assert_eq!(window_size(40.0).unwrap(), 2);
    }

    #[test]
    fn config_override() {
        let c = DetectorConfig::new(30.0, 100.0, Some(3)).unwrap();
        assert_eq!(c.window_size(), 3);
        assert!(DetectorConfig::new(1000.0, 100.0, Some(1)).is_err());
        assert!(DetectorConfig::new(1000.0, -1.0, None).is_err());
        assert!(DetectorConfig::new(1000.0, f64::NAN, None).is_err());
        assert!(DetectorConfig::new(30.0, 100.0, None).is_err());
    }

    #[test]
    fn constant_window() {
        let w = window_stats(&trace(&[0.0; 5]), 0, 5).unwrap();
        assert_eq!((w.tdt, w.datcf, w.valid_count, w.im), (0.0, 0.0, 5, 0.0));
    }

    #[test]
    fn monotone_window() {
        let w = window_stats(&trace(&[0.0, 1.0, 2.0, 3.0, 4.0]), 0, 5).unwrap();
        assert_eq!((w.tdt, w.datcf, w.im), (4.0, 4.0, 0.0));
    }

    #[test]
    fn alternating_window() {
        let w = window_stats(&trace(&[0.0, 2.0, 0.0, 2.0, 0.0]), 0, 5).unwrap();
        assert_eq!((w.tdt, w.datcf, w.im), (8.0, 0.0, 1600.0));
    }

    #[test]
    fn missing_sample_pairs_skipped() {
        let t = PositionTrace::from_options(vec![Some(0.0), None, Some(2.0), Some(3.0)], 1000.0)
            .unwrap();
        let w = window_stats(&t, 0, 4).unwrap();
        assert_eq!((w.tdt, w.datcf, w.valid_count, w.im), (1.0, 1.0, 3, 0.0));
    }

    #[test]
    fn single_valid_sample_is_degenerate() {
        let t = PositionTrace::from_options(vec![None, Some(5.0), None], 1000.0).unwrap();
        let w = window_stats(&t, 0, 3).unwrap();
        assert_eq!((w.tdt, w.datcf, w.valid_count, w.im), (0.0, 0.0, 1, 0.0));
    }

    #[test]
    fn window_out_of_bounds() {
        let t = trace(&[0.0; 5]);
        assert!(matches!(
            window_stats(&t, 1, 5),
            Err(Error::WindowOutOfBounds { start: 1, .. })
        ));
        assert!(window_stats(&t, usize::MAX, 5).is_err());
    }

    #[test]
    fn series_counts_and_values() {
        let c = DetectorConfig::new(1000.0, 100.0, Some(2)).unwrap();
        let s = inefficiency_series(&trace(&[3.0; 5]), &c).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|w| w.im == 0.0));

        let c = DetectorConfig::new(1000.0, 100.0, Some(5)).unwrap();
        let s = inefficiency_series(&trace(&[0.0, 2.0, 0.0, 2.0, 0.0, 2.0]), &c).unwrap();
        assert_eq!(
            s.iter().map(|w| w.im).collect::<Vec<_>>(),
            vec![1600.0, 1600.0]
        );
        assert_eq!(s[1].start_index, 1);

        let t = PositionTrace::from_options(vec![None; 10], 1000.0).unwrap();
        let s = inefficiency_series(&t, &c).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|w| w.valid_count == 0 && w.im == 0.0));
    }

    #[test]
    fn short_trace_is_input_error() {
        let c = DetectorConfig::new(1000.0, 100.0, None).unwrap();
        let t = trace(&[0.0; 49]);
        assert!(matches!(inefficiency_series(&t, &c), Err(Error::Input(_))));
        assert!(matches!(detect(&t, &c), Err(Error::Input(_))));
        assert_eq!(detect_lenient(&t, &c).unwrap(), NoiseMask::clean(49));
    }

    #[test]
    fn strict_threshold() {
        let t = trace(&[0.0, 2.0, 0.0, 2.0, 0.0]);
        let at = DetectorConfig::new(1000.0, 1600.0, Some(5)).unwrap();
        assert_eq!(detect(&t, &at).unwrap().flagged_count(), 0);
        let below = at.with_threshold(1599.0).unwrap();
        assert_eq!(detect(&t, &below).unwrap().flagged_count(), 5);
    }

    #[test]
    fn constant_and_missing_traces_are_clean() {
        let c = DetectorConfig::new(1000.0, 0.5, None).unwrap();
        assert_eq!(detect(&trace(&[1.5; 1000]), &c).unwrap().flagged_count(), 0);
        let t = PositionTrace::from_options(vec![None; 200], 1000.0).unwrap();
        assert_eq!(detect(&t, &c).unwrap().flagged_count(), 0);
    }

    #[test]
    fn final_sample_is_covered() {
        // Noise only at the very end: the last window must reach the last sample.
        let mut v = vec![0.0; 20];
        v[19] = 5.0;
        v[18] = -5.0;
        v[17] = 5.0;
        let c = DetectorConfig::new(1000.0, 10.0, Some(4)).unwrap();
        let m = detect(&trace(&v), &c).unwrap();
        assert_eq!(m.get(19), Some(true));
    }

    #[test]
    fn segments_from_mask() {
        let mask = NoiseMask::from_flags(vec![false, false, true, true, false, true]);
        let segs = mask_to_segments(&mask, &[], 500.0);
        let runs: Vec<_> = segs.iter().map(|s| (s.start_index, s.end_index)).collect();
        assert_eq!(runs, vec![(2, 3), (5, 5)]);
        assert_eq!(segs[0].start_time_s, 0.004);
        assert_eq!(segs[0].end_time_s, 0.006);

        assert!(mask_to_segments(&NoiseMask::clean(10), &[], 500.0).is_empty());
        let all = mask_to_segments(&NoiseMask::from_flags(vec![true; 7]), &[], 500.0);
        assert_eq!(all.len(), 1);
        assert_eq!((all[0].start_index, all[0].end_index), (0, 6));
    }

    #[test]
    fn segment_peak_im() {
        let mut v = vec![0.0; 30];
        for (i, x) in v.iter_mut().enumerate().skip(10).take(6) {
            *x = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let t = trace(&v);
        let c = DetectorConfig::new(1000.0, 100.0, Some(4)).unwrap();
        let stats = inefficiency_series(&t, &c).unwrap();
        let mask = detect(&t, &c).unwrap();
        let segs = mask_to_segments(&mask, &stats, 1000.0);
        assert_eq!(segs.len(), 1);
        let max = stats.iter().map(|w| w.im).fold(0.0, f64::max);
        assert_eq!(segs[0].peak_im, max);
        assert_eq!(segs[0].start_index, 8);
        assert_eq!(segs[0].end_index, 17);
    }

    #[test]
    fn union_masks() {
        let a = NoiseMask::from_flags(vec![true, false, false]);
        let b = NoiseMask::from_flags(vec![false, false, true]);
        assert_eq!(a.union(&b).unwrap().flags(), &[true, false, true]);
        assert!(a.union(&NoiseMask::clean(2)).is_err());
    }
}
