//! Detection of rapid, irregularly oscillating noise in eye-position signals
//! from video-oculography (VOG).
//!
//! When a video eye tracker transiently loses the pupil or the corneal
//! reflection, the reported position jumps back and forth between the true
//! gaze and a false one. Such stretches travel a long total distance while
//! going nowhere. This crate measures that inefficiency over a sliding 50 ms
//! window and flags windows where it exceeds an empirically chosen threshold.
//!
//! ```
//! use rioneps::{detect, DetectorConfig, PositionTrace};
//!
//! let samples: Vec<f64> = (0..200)
//!     .map(|i| if (80..=120).contains(&i) { (i % 2) as f64 * 2.0 } else { 0.0 })
//!     .collect();
//! let trace = PositionTrace::from_values(samples, 500.0)?;
//! let config = DetectorConfig::new(500.0, 100.0, None)?;
//! let mask = detect(&trace, &config)?;
//! assert!(mask.flags()[80..=120].iter().all(|&f| f));
//! # Ok::<(), rioneps::Error>(())
//! ```
//!
//! Modules:
//! - [`detector`]: window statistics and batch detection
//! - [`streaming`]: sample-by-sample detection, identical to batch
//! - [`signal_io`]: delimited-text input and result files
//! - [`synth`]: synthetic traces with labeled noise
//! - [`calibrate`]: threshold sweeps against labels

pub mod calibrate;
pub mod detector;
pub mod error;
pub mod signal_io;
pub mod streaming;
pub mod synth;
pub mod trace;

pub use calibrate::{parse_threshold_range, sweep, Score, ScoreCounts, SweepResult, SweepRow};
pub use detector::{
    detect, detect_lenient, inefficiency_series, mask_from_stats, mask_to_segments, window_size,
    window_stats, DetectorConfig, NoiseMask, NoiseSegment, WindowStats,
};
pub use error::{Error, Result};
pub use streaming::StreamingDetector;
pub use synth::{generate, inject, Fixation, LabelSet, NoiseInjection, SynthSpec};
pub use trace::{Channel, PositionTrace};
