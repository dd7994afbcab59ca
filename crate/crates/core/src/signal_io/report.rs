use serde::{Deserialize, Serialize};

use crate::detector::{
    detect_lenient, inefficiency_series, mask_to_segments, DetectorConfig, NoiseMask, NoiseSegment,
    WindowStats,
};
use crate::error::{Error, Result};
use crate::trace::{Channel, PositionTrace};

use super::ingest::LoadedRecording;

/// Which channels to analyze.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelSelection {
    Horizontal,
    Vertical,
    Both,
    /// Both channels plus a mask flagging a sample when either channel does.
    Union,
}

impl std::str::FromStr for ChannelSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" | "horizontal" => Ok(Self::Horizontal),
            "v" | "vertical" => Ok(Self::Vertical),
            "both" => Ok(Self::Both),
            "union" => Ok(Self::Union),
            other => Err(Error::Config(format!(
                "unknown channel '{other}' (expected h, v, both or union)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window_count: usize,
    pub max_im: f64,
    pub flagged_count: usize,
    pub fraction_flagged: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub channel: Channel,
    pub mask: NoiseMask,
    pub segments: Vec<NoiseSegment>,
    pub stats: Vec<WindowStats>,
    pub summary: WindowSummary,
}

impl ChannelReport {
    /// Runs detection on one trace. A trace shorter than the window is
    /// reported clean with no windows, as a stream of that length would be.
    pub fn analyze(trace: &PositionTrace, config: &DetectorConfig) -> Result<Self> {
        let stats = if trace.len() < config.window_size() {
            Vec::new()
        } else {
            inefficiency_series(trace, config)?
        };
        let mask = detect_lenient(trace, config)?;
        let segments = mask_to_segments(&mask, &stats, config.sample_rate_hz);
        let summary = WindowSummary {
            window_count: stats.len(),
            max_im: stats.iter().map(|w| w.im).fold(0.0, f64::max),
            flagged_count: mask.flagged_count(),
            fraction_flagged: mask.fraction_flagged(),
        };
        Ok(Self {
            channel: trace.channel(),
            mask,
            segments,
            stats,
            summary,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub config: DetectorConfig,
    pub sample_count: usize,
    pub channels: Vec<ChannelReport>,
    /// Present when the union of both channels was requested.
    pub union: Option<NoiseMask>,
    pub union_segments: Vec<NoiseSegment>,
    /// Passed through from the input, never analyzed.
    pub pupil: Option<Vec<Option<f64>>>,
    pub warnings: Vec<String>,
}

impl DetectionReport {
    pub fn build(
        recording: &LoadedRecording,
        config: &DetectorConfig,
        selection: ChannelSelection,
    ) -> Result<Self> {
        let want_h = matches!(
            selection,
            ChannelSelection::Horizontal | ChannelSelection::Both | ChannelSelection::Union
        );
        let want_v = matches!(
            selection,
            ChannelSelection::Vertical | ChannelSelection::Both | ChannelSelection::Union
        );
        let pick = |wanted: bool,
                    trace: &Option<PositionTrace>,
                    name: &str|
         -> Result<Option<PositionTrace>> {
            match (wanted, trace) {
                (false, _) => Ok(None),
                (true, Some(t)) => Ok(Some(t.clone())),
                (true, None) => Err(Error::Input(format!("input has no {name} position column"))),
            }
        };
        let h = pick(want_h, &recording.horizontal, "horizontal")?;
        let v = pick(want_v, &recording.vertical, "vertical")?;

        let mut report = Self::from_traces(
            h.iter().chain(v.iter()),
            config,
            selection == ChannelSelection::Union,
        )?;
        report.pupil = recording.pupil.clone();
        report.warnings.extend(recording.warnings.iter().cloned());
        if report.sample_count < config.window_size() {
            report.warnings.push(format!(
                "input has {} samples, fewer than the window size {}; reported as clean",
                report.sample_count,
                config.window_size()
            ));
        }
        Ok(report)
    }

    /// Analyzes each trace independently. With `union`, exactly two traces
    /// are required and their masks are OR-ed.
    pub fn from_traces<'a>(
        traces: impl IntoIterator<Item = &'a PositionTrace>,
        config: &DetectorConfig,
        union: bool,
    ) -> Result<Self> {
        let channels = traces
            .into_iter()
            .map(|t| ChannelReport::analyze(t, config))
            .collect::<Result<Vec<_>>>()?;
        let sample_count = channels.first().map_or(0, |c| c.mask.len());
        if channels.iter().any(|c| c.mask.len() != sample_count) {
            return Err(Error::Input("channels have different lengths".into()));
        }
        let (union, union_segments) = if union {
            let [a, b] = channels.as_slice() else {
                return Err(Error::Input("union requires exactly two channels".into()));
            };
            let mask = a.mask.union(&b.mask)?;
            let segments = mask_to_segments(&mask, &a.stats, config.sample_rate_hz)
                .into_iter()
                .zip(mask_to_segments(&mask, &b.stats, config.sample_rate_hz))
                .map(|(mut sa, sb)| {
                    sa.peak_im = sa.peak_im.max(sb.peak_im);
                    sa
                })
                .collect();
            (Some(mask), segments)
        } else {
            (None, Vec::new())
        };
        Ok(Self {
            config: *config,
            sample_count,
            channels,
            union,
            union_segments,
            pupil: None,
            warnings: Vec::new(),
        })
    }

    pub fn channel(&self, channel: Channel) -> Option<&ChannelReport> {
        self.channels.iter().find(|c| c.channel == channel)
    }
}
