use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::SweepResult;
use crate::detector::{NoiseMask, NoiseSegment, WindowStats};
use crate::error::{Error, Result};
use crate::synth::LabelSet;
use crate::trace::{Channel, PositionTrace};

use super::report::{DetectionReport, WindowSummary};

pub const STATS_FORMAT: &str = "rioneps-stats";
pub const STATS_VERSION: u32 = 1;

/// Destinations for [`write_outputs`]; `None` skips that file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub mask: PathBuf,
    pub segments: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub im_series: Option<PathBuf>,
}

impl OutputPaths {
    /// Mask at `mask`, with `<stem>.segments.csv` and `<stem>.stats.json`
    /// next to it. No im-series file.
    pub fn beside(mask: impl Into<PathBuf>) -> Self {
        let mask = mask.into();
        Self {
            segments: Some(sibling(&mask, "segments.csv")),
            stats: Some(sibling(&mask, "stats.json")),
            im_series: None,
            mask,
        }
    }

    pub fn default_im_series(&self) -> PathBuf {
        sibling(&self.mask, "im.csv")
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), num)
}

struct Out {
    path: PathBuf,
    w: BufWriter<File>,
}

impl Out {
    fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            w: BufWriter::new(file),
        })
    }

    fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.w, "{text}").map_err(|e| Error::io(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes the mask, segments, stats and im-series files requested in `paths`.
///
/// `im_in_stats` embeds every channel's IM series in the stats file.
pub fn write_outputs(
    report: &DetectionReport,
    paths: &OutputPaths,
    im_in_stats: bool,
) -> Result<()> {
    write_mask(report, &paths.mask)?;
    if let Some(p) = &paths.segments {
        write_segments(report, p)?;
    }
    if let Some(p) = &paths.stats {
        write_stats(report, p, im_in_stats)?;
    }
    if let Some(p) = &paths.im_series {
        write_im_series(report, p)?;
    }
    Ok(())
}

fn write_mask(report: &DetectionReport, path: &Path) -> Result<()> {
    let h = report.channel(Channel::Horizontal).map(|c| &c.mask);
    let v = report.channel(Channel::Vertical).map(|c| &c.mask);
    let mut out = Out::create(path)?;
    let mut header = String::from("index,flag_h,flag_v");
    if report.union.is_some() {
        header.push_str(",flag_union");
    }
    if report.pupil.is_some() {
        header.push_str(",pupil");
    }
    out.line(&header)?;
    let flag = |m: Option<&NoiseMask>, i: usize| match m.and_then(|m| m.get(i)) {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    };
    for i in 0..report.sample_count {
        let mut row = format!("{i},{},{}", flag(h, i), flag(v, i));
        if let Some(u) = &report.union {
            row.push(',');
            row.push_str(flag(Some(u), i));
        }
        if let Some(p) = &report.pupil {
            row.push(',');
            row.push_str(&opt_num(p.get(i).copied().flatten()));
        }
        out.line(&row)?;
    }
    out.finish()
}

fn write_segments(report: &DetectionReport, path: &Path) -> Result<()> {
    let mut out = Out::create(path)?;
    out.line("channel,start_index,end_index,start_time_s,end_time_s,peak_im")?;
    let mut rows = |name: &str, segs: &[NoiseSegment]| -> Result<()> {
        for s in segs {
            out.line(&format!(
                "{name},{},{},{},{},{}",
                s.start_index,
                s.end_index,
                num(s.start_time_s),
                num(s.end_time_s),
                num(s.peak_im)
            ))?;
        }
        Ok(())
    };
    for c in &report.channels {
        rows(c.channel.short_name(), &c.segments)?;
    }
    rows("union", &report.union_segments)?;
    out.finish()
}

/// Contents of the JSON stats file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub format: String,
    pub version: u32,
    pub config: StatsConfigEcho,
    pub sample_count: usize,
    pub warnings: Vec<String>,
    pub channels: Vec<ChannelStatsEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsConfigEcho {
    pub sample_rate_hz: f64,
    pub inefficiency_threshold: f64,
    pub window_size: usize,
    pub window_size_override: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStatsEntry {
    pub channel: String,
    #[serde(flatten)]
    pub summary: WindowSummary,
    pub segment_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

fn write_stats(report: &DetectionReport, path: &Path, include_im: bool) -> Result<()> {
    let stats = StatsFile {
        format: STATS_FORMAT.to_string(),
        version: STATS_VERSION,
        config: StatsConfigEcho {
            sample_rate_hz: report.config.sample_rate_hz,
            inefficiency_threshold: report.config.inefficiency_threshold,
            window_size: report.config.window_size(),
            window_size_override: report.config.window_size_override,
        },
        sample_count: report.sample_count,
        warnings: report.warnings.clone(),
        channels: report
            .channels
            .iter()
            .map(|c| ChannelStatsEntry {
                channel: c.channel.short_name().to_string(),
                summary: c.summary,
                segment_count: c.segments.len(),
                im: include_im.then(|| c.stats.iter().map(|w| w.im).collect()),
            })
            .collect(),
    };
    let mut out = Out::create(path)?;
    serde_json::to_writer_pretty(&mut out.w, &stats)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    out.line("")?;
    out.finish()
}

pub fn read_stats(path: impl AsRef<Path>) -> Result<StatsFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

/// One row per window and channel:
/// `channel,start_index,tdt,datcf,valid_count,im`.
pub fn write_im_series(report: &DetectionReport, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Out::create(path.as_ref())?;
    out.line("channel,start_index,tdt,datcf,valid_count,im")?;
    for c in &report.channels {
        for w in &c.stats {
            out.line(&format!(
                "{},{},{},{},{},{}",
                c.channel.short_name(),
                w.start_index,
                num(w.tdt),
                num(w.datcf),
                w.valid_count,
                num(w.im)
            ))?;
        }
    }
    out.finish()
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_rows<T>(
    path: &Path,
    mut row: impl FnMut(&csv::StringRecord) -> Option<T>,
) -> Result<Vec<T>> {
    let mut rdr = open_csv(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(row(&rec).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: "malformed row".into(),
        })?);
    }
    Ok(out)
}

/// Reads a file written by [`write_im_series`].
pub fn read_im_series(path: impl AsRef<Path>) -> Result<Vec<(String, WindowStats)>> {
    parse_rows(path.as_ref(), |r| {
        Some((
            r.get(0)?.to_string(),
            WindowStats {
                start_index: r.get(1)?.parse().ok()?,
                tdt: r.get(2)?.parse().ok()?,
                datcf: r.get(3)?.parse().ok()?,
                valid_count: r.get(4)?.parse().ok()?,
                im: r.get(5)?.parse().ok()?,
            },
        ))
    })
}

/// Reads the horizontal and vertical columns of a mask file. A column left
/// empty (channel not analyzed) comes back as `None`.
pub fn read_mask(path: impl AsRef<Path>) -> Result<(Option<NoiseMask>, Option<NoiseMask>)> {
    let parse = |s: &str| -> Option<Option<bool>> {
        match s {
            "1" => Some(Some(true)),
            "0" => Some(Some(false)),
            "" => Some(None),
            _ => None,
        }
    };
    let rows = parse_rows(path.as_ref(), |r| {
        Some((parse(r.get(1)?)?, parse(r.get(2)?)?))
    })?;
    let column = |flags: Vec<Option<bool>>| -> Option<NoiseMask> {
        flags
            .iter()
            .all(Option::is_some)
            .then(|| NoiseMask::from_flags(flags.into_iter().map(|f| f.unwrap_or(false)).collect()))
    };
    let (h, v): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let empty = h.is_empty();
    let h = column(h).filter(|_| !empty);
    let v = column(v).filter(|_| !empty);
    Ok((h, v))
}

/// Writes traces of equal length as `t,x[,y]`, with `t = index / rate`,
/// after a `# sample_rate_hz=<rate>` comment line. Horizontal and other
/// channels go to `x`, vertical to `y`.
pub fn write_trace(path: impl AsRef<Path>, traces: &[&PositionTrace]) -> Result<()> {
    let Some(first) = traces.first() else {
        return Err(Error::Input("no traces to write".into()));
    };
    if traces.iter().any(|t| t.len() != first.len()) {
        return Err(Error::Input("traces have different lengths".into()));
    }
    let mut ordered: Vec<&PositionTrace> = traces.to_vec();
    ordered.sort_by_key(|t| t.channel() == Channel::Vertical);
    let mut header = String::from("t");
    for t in &ordered {
        header.push_str(if t.channel() == Channel::Vertical {
            ",y"
        } else {
            ",x"
        });
    }
    let rate = first.sample_rate_hz();
    let mut out = Out::create(path.as_ref())?;
    out.line(&format!("# sample_rate_hz={rate}"))?;
    out.line(&header)?;
    for i in 0..first.len() {
        let mut row = num(i as f64 / rate);
        for t in &ordered {
            row.push(',');
            row.push_str(&opt_num(t.get(i)));
        }
        out.line(&row)?;
    }
    out.finish()
}

/// Ground-truth labels as `index,label` rows (label 0 or 1).
pub fn write_labels(path: impl AsRef<Path>, labels: &LabelSet) -> Result<()> {
    let mut out = Out::create(path.as_ref())?;
    out.line("index,label")?;
    for (i, &l) in labels.labels().iter().enumerate() {
        out.line(&format!("{i},{}", u8::from(l)))?;
    }
    out.finish()
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let rows = parse_rows(path, |r| {
        let index: usize = r.get(0)?.parse().ok()?;
        let label = match r.get(1)? {
            "1" => true,
            "0" => false,
            _ => return None,
        };
        Some((index, label))
    })?;
    if let Some((pos, _)) = rows.iter().enumerate().find(|(pos, (i, _))| pos != i) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: pos as u64 + 2,
            message: format!("expected index {pos}"),
        });
    }
    Ok(LabelSet::from_labels(
        rows.into_iter().map(|(_, l)| l).collect(),
    ))
}

/// Writes a threshold sweep, one row per threshold. Columns without a suffix
/// are per-sample counts; `_tol` columns excuse predictions within WS-1
/// samples of a labeled sample.
pub fn write_sweep(path: impl AsRef<Path>, sweep: &SweepResult) -> Result<()> {
    let mut out = Out::create(path.as_ref())?;
    out.line(
        "threshold,predicted_positive,tp,fp,fn,tn,precision,recall,f1,\
         tp_tol,fp_tol,fn_tol,tn_tol,precision_tol,recall_tol,f1_tol",
    )?;
    for r in &sweep.rows {
        let s = &r.strict;
        let t = &r.tolerant;
        out.line(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(r.threshold),
            r.predicted_positive,
            s.counts.tp,
            s.counts.fp,
            s.counts.fn_,
            s.counts.tn,
            num(s.precision),
            num(s.recall),
            num(s.f1),
            t.counts.tp,
            t.counts.fp,
            t.counts.fn_,
            t.counts.tn,
            num(t.precision),
            num(t.recall),
            num(t.f1),
        ))?;
    }
    out.finish()
}
