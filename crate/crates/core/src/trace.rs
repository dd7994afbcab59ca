use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which eye-position component a trace holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Horizontal,
    Vertical,
    Other,
}

impl Channel {
    /// Short label used in output files (`h`, `v`, `other`).
    pub fn short_name(self) -> &'static str {
        match self {
            Channel::Horizontal => "h",
            Channel::Vertical => "v",
            Channel::Other => "other",
        }
    }
}

/// One channel of eye-position samples at a fixed sample rate.
///
/// Missing samples are stored as NaN internally; any non-finite value handed
/// to a constructor is normalized to missing, so every present sample is
/// finite.
#[derive(Debug, Clone)]
pub struct PositionTrace {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    channel: Channel,
    unit_label: String,
}

impl PositionTrace {
    /// Builds a trace from raw values, treating NaN and infinities as missing.
    pub fn from_values(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        check_rate(sample_rate_hz)?;
        let samples = samples
            .into_iter()
            .map(|v| if v.is_finite() { v } else { f64::NAN })
            .collect();
        Ok(Self {
            samples,
            sample_rate_hz,
            channel: Channel::Other,
            unit_label: String::new(),
        })
    }

    pub fn from_options<I>(samples: I, sample_rate_hz: f64) -> Result<Self>
    where
        I: IntoIterator<Item = Option<f64>>,
    {
        Self::from_values(
            samples.into_iter().map(|s| s.unwrap_or(f64::NAN)).collect(),
            sample_rate_hz,
        )
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = channel;
        self
    }

    pub fn with_unit(mut self, unit_label: impl Into<String>) -> Self {
        self.unit_label = unit_label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn unit_label(&self) -> &str {
        &self.unit_label
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.samples.get(index).copied().filter(|v| !v.is_nan())
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.samples
            .iter()
            .map(|&v| if v.is_nan() { None } else { Some(v) })
    }

    /// Raw sample storage, NaN marking missing samples.
    pub fn raw(&self) -> &[f64] {
        &self.samples
    }

    pub fn missing_count(&self) -> usize {
        self.samples.iter().filter(|v| v.is_nan()).count()
    }

    /// Returns a copy with `f` applied to every present sample.
    pub fn map_present(&self, f: impl Fn(f64) -> f64) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|&v| {
                if v.is_nan() {
                    v
                } else {
                    let w = f(v);
                    if w.is_finite() {
                        w
                    } else {
                        f64::NAN
                    }
                }
            })
            .collect();
        Self {
            samples,
            ..self.clone()
        }
    }

    /// Returns a copy with sample `index` replaced (`None` marks it missing).
    pub fn with_sample(&self, index: usize, value: Option<f64>) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::Input(format!(
                "sample index {index} out of range for trace of length {}",
                self.len()
            )));
        }
        let mut out = self.clone();
        out.samples[index] = value.filter(|v| v.is_finite()).unwrap_or(f64::NAN);
        Ok(out)
    }
}

impl PartialEq for PositionTrace {
    /// Missing samples compare equal to each other.
    fn eq(&self, other: &Self) -> bool {
        self.sample_rate_hz == other.sample_rate_hz
            && self.channel == other.channel
            && self.unit_label == other.unit_label
            && self.iter().eq(other.iter())
    }
}

fn check_rate(sample_rate_hz: f64) -> Result<()> {
    if sample_rate_hz.is_finite() && sample_rate_hz > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )))
    }
}
