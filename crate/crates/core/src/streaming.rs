//! Online detection with bounded latency.
//!
//! A sample's flag depends only on windows that contain it, so once the
//! window starting at sample `j` is complete no later window can change
//! `j`'s flag. The detector therefore finalizes sample `j` when sample
//! `j + WS - 1` arrives and produces exactly the flags of [`detect`] on the
//! same samples.
//!
//! [`detect`]: crate::detector::detect

use std::collections::VecDeque;

use crate::detector::{pair_difference, reduce_window, DetectorConfig, WindowStats};

/// Incremental detector holding O(WS) state.
///
/// Not meant to be shared between threads for simultaneous use; move it to
/// the thread that feeds it.
#[derive(Debug, Clone)]
pub struct StreamingDetector {
    config: DetectorConfig,
    ws: usize,
    prev: f64,
    diffs: VecDeque<f64>,
    present: VecDeque<bool>,
    valid: usize,
    pushed: usize,
    emitted: usize,
    last_flagged_start: Option<usize>,
    last_window: Option<WindowStats>,
}

impl StreamingDetector {
    pub fn new(config: DetectorConfig) -> Self {
        let ws = config.window_size();
        Self {
            config,
            ws,
            prev: f64::NAN,
            diffs: VecDeque::with_capacity(ws),
            present: VecDeque::with_capacity(ws + 1),
            valid: 0,
            pushed: 0,
            emitted: 0,
            last_flagged_start: None,
            last_window: None,
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Number of samples pushed since creation or the last flush.
    pub fn pushed(&self) -> usize {
        self.pushed
    }

    /// Index of the last sample whose flag has been emitted, if any.
    pub fn emitted_watermark(&self) -> Option<usize> {
        self.emitted.checked_sub(1)
    }

    /// Statistics of the most recently completed window.
    pub fn last_window(&self) -> Option<&WindowStats> {
        self.last_window.as_ref()
    }

    /// Appends one sample (`None` = missing; non-finite values count as
    /// missing) and returns the `(index, flag)` pairs finalized by it.
    pub fn push(&mut self, sample: Option<f64>) -> Vec<(usize, bool)> {
        let x = sample.filter(|v| v.is_finite()).unwrap_or(f64::NAN);
        if self.pushed > 0 {
            if self.diffs.len() == self.ws - 1 {
                self.diffs.pop_front();
            }
            self.diffs.push_back(pair_difference(self.prev, x));
        }
        if self.present.len() == self.ws && self.present.pop_front() == Some(true) {
            self.valid -= 1;
        }
        let is_present = !x.is_nan();
        self.present.push_back(is_present);
        self.valid += usize::from(is_present);
        self.prev = x;
        self.pushed += 1;

        if self.pushed < self.ws {
            return Vec::new();
        }
        let start = self.pushed - self.ws;
        let stats = reduce_window(start, self.diffs.iter().copied(), self.valid);
        if stats.im > self.config.inefficiency_threshold {
            self.last_flagged_start = Some(start);
        }
        self.last_window = Some(stats);

        // Every window containing `start` is now known.
        let out = (self.emitted..=start)
            .map(|j| (j, self.flag_of(j)))
            .collect();
        self.emitted = start + 1;
        out
    }

    pub fn push_value(&mut self, sample: f64) -> Vec<(usize, bool)> {
        self.push(Some(sample))
    }

    /// Emits flags for all samples not yet finalized and resets the detector
    /// so that it can start a new stream at index 0.
    ///
    /// A stream shorter than the window never completes a window, so all of
    /// its samples are reported clean.
    pub fn flush(&mut self) -> Vec<(usize, bool)> {
        let out = if self.pushed < self.ws {
            (self.emitted..self.pushed).map(|j| (j, false)).collect()
        } else {
            (self.emitted..self.pushed)
                .map(|j| (j, self.flag_of(j)))
                .collect()
        };
        *self = Self::new(self.config);
        out
    }

    fn flag_of(&self, index: usize) -> bool {
        self.last_flagged_start
            .is_some_and(|s| s <= index && index < s + self.ws)
    }
}
