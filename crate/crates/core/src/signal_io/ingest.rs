use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trace::{Channel, PositionTrace};

/// A column addressed by 0-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        }
    }

    fn resolve(&self, header: Option<&csv::StringRecord>) -> Result<usize> {
        match self {
            ColumnRef::Index(i) => Ok(*i),
            ColumnRef::Name(name) => header
                .and_then(|h| h.iter().position(|f| f == name))
                .ok_or_else(|| Error::Input(format!("column '{name}' not found in header"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColumnMap {
    pub time: Option<ColumnRef>,
    pub horizontal: Option<ColumnRef>,
    pub vertical: Option<ColumnRef>,
    /// Passed through to outputs, never analyzed.
    pub pupil: Option<ColumnRef>,
}

/// Parses `key=column` pairs separated by commas, e.g. `t=0,h=gaze_x,v=gaze_y`.
///
/// Keys: `t`/`time`, `h`/`x`/`horizontal`, `v`/`y`/`vertical`, `p`/`pupil`.
/// A purely numeric column is a 0-based index, anything else a header name.
impl FromStr for ColumnMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut map = ColumnMap::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, col) = part.split_once('=').ok_or_else(|| {
                Error::Config(format!("column mapping '{part}' is not key=column"))
            })?;
            let col = col.trim();
            if col.is_empty() {
                return Err(Error::Config(format!(
                    "column mapping '{part}' has no column"
                )));
            }
            let slot = match key.trim().to_ascii_lowercase().as_str() {
                "t" | "time" => &mut map.time,
                "h" | "x" | "horizontal" => &mut map.horizontal,
                "v" | "y" | "vertical" => &mut map.vertical,
                "p" | "pupil" => &mut map.pupil,
                other => return Err(Error::Config(format!("unknown column key '{other}'"))),
            };
            *slot = Some(ColumnRef::parse(col));
        }
        if map.horizontal.is_none() && map.vertical.is_none() {
            return Err(Error::Config(
                "column mapping must include a horizontal or vertical position column".into(),
            ));
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelection {
    /// With a header, picks columns named `t`/`time`/`time_s`, `x`/`h`,
    /// `y`/`v` and `pupil` when present. Without a header, column 0 is the
    /// horizontal trace.
    Auto,
    Explicit(ColumnMap),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSpec {
    pub columns: ColumnSelection,
    pub delimiter: u8,
    pub has_header: bool,
    /// Field values (after trimming) that mark a missing sample.
    pub missing_tokens: Vec<String>,
    /// Numeric values that mark a missing sample, e.g. `-9999`.
    pub missing_sentinels: Vec<f64>,
    /// Authoritative sample rate; timestamps are only cross-checked.
    pub sample_rate_hz: f64,
    pub check_timestamps: bool,
    /// Seconds per unit of the time column.
    pub time_unit_s: f64,
    pub unit_label: String,
}

impl IngestSpec {
    pub fn new(sample_rate_hz: f64) -> Self {
        Self {
            columns: ColumnSelection::Auto,
            delimiter: b',',
            has_header: true,
            missing_tokens: ["", "NaN", "nan", "NA", "N/A", "."]
                .into_iter()
                .map(String::from)
                .collect(),
            missing_sentinels: Vec::new(),
            sample_rate_hz,
            check_timestamps: false,
            time_unit_s: 1.0,
            unit_label: String::new(),
        }
    }

    /// Adds user-supplied missing markers; numeric ones also act as sentinels.
    pub fn with_missing_markers<S: AsRef<str>>(mut self, markers: &[S]) -> Self {
        for m in markers {
            let m = m.as_ref().trim();
            if let Ok(v) = m.parse::<f64>() {
                if v.is_finite() {
                    self.missing_sentinels.push(v);
                }
            }
            self.missing_tokens.push(m.to_string());
        }
        self
    }

    fn parse_field(&self, field: &str) -> std::result::Result<Option<f64>, String> {
        let field = field.trim();
        if self.missing_tokens.iter().any(|t| t == field) {
            return Ok(None);
        }
        let v: f64 = field
            .parse()
            .map_err(|_| format!("cannot parse '{field}' as a number"))?;
        if !v.is_finite() || self.missing_sentinels.contains(&v) {
            Ok(None)
        } else {
            Ok(Some(v))
        }
    }

    fn resolve(&self, header: Option<&csv::StringRecord>) -> Result<ResolvedColumns> {
        let map = match &self.columns {
            ColumnSelection::Explicit(map) => map.clone(),
            ColumnSelection::Auto => match header {
                Some(h) => {
                    let find = |names: &[&str]| {
                        h.iter()
                            .position(|f| names.iter().any(|n| f.eq_ignore_ascii_case(n)))
                            .map(ColumnRef::Index)
                    };
                    ColumnMap {
                        time: find(&["t", "time", "time_s"]),
                        horizontal: find(&["x", "h", "horizontal"]),
                        vertical: find(&["y", "v", "vertical"]),
                        pupil: find(&["pupil"]),
                    }
                }
                None => ColumnMap {
                    horizontal: Some(ColumnRef::Index(0)),
                    ..Default::default()
                },
            },
        };
        if map.horizontal.is_none() && map.vertical.is_none() {
            return Err(Error::Input(
                "no horizontal or vertical position column found".into(),
            ));
        }
        let r = |c: &Option<ColumnRef>| c.as_ref().map(|c| c.resolve(header)).transpose();
        Ok(ResolvedColumns {
            time: r(&map.time)?,
            horizontal: r(&map.horizontal)?,
            vertical: r(&map.vertical)?,
            pupil: r(&map.pupil)?,
        })
    }
}

struct ResolvedColumns {
    time: Option<usize>,
    horizontal: Option<usize>,
    vertical: Option<usize>,
    pupil: Option<usize>,
}

/// The channels read from one file, all of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRecording {
    pub horizontal: Option<PositionTrace>,
    pub vertical: Option<PositionTrace>,
    pub time_s: Option<Vec<Option<f64>>>,
    pub pupil: Option<Vec<Option<f64>>>,
    pub warnings: Vec<String>,
    pub rows: usize,
}

pub fn load_trace(path: impl AsRef<Path>, spec: &IngestSpec) -> Result<LoadedRecording> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(file, spec, path)
}

/// Reads a recording from any reader; `source` names it in error messages.
pub fn read_trace<R: Read>(
    reader: R,
    spec: &IngestSpec,
    source: impl AsRef<Path>,
) -> Result<LoadedRecording> {
    let source = source.as_ref();
    if !(spec.sample_rate_hz.is_finite() && spec.sample_rate_hz > 0.0) {
        return Err(Error::Config(format!(
            "sample rate must be positive and finite, got {}",
            spec.sample_rate_hz
        )));
    }
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(spec.has_header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let header = if spec.has_header {
        Some(rdr.headers().map_err(|e| csv_error(e, source))?.clone())
    } else {
        None
    };
    let cols = spec.resolve(header.as_ref())?;

    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    let mut time = Vec::new();
    let mut pupil = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(csv_error(e, source)),
        }
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: Option<usize>, out: &mut Vec<Option<f64>>| -> Result<()> {
            if let Some(c) = col {
                let raw = record
                    .get(c)
                    .ok_or_else(|| parse_err(line, format!("row has no column {c}")))?;
                out.push(spec.parse_field(raw).map_err(|m| parse_err(line, m))?);
            }
            Ok(())
        };
        field(cols.horizontal, &mut horizontal)?;
        field(cols.vertical, &mut vertical)?;
        field(cols.time, &mut time)?;
        field(cols.pupil, &mut pupil)?;
    }

    let rows = horizontal.len().max(vertical.len());
    let make = |samples: Vec<Option<f64>>, channel| -> Result<PositionTrace> {
        Ok(PositionTrace::from_options(samples, spec.sample_rate_hz)?
            .with_channel(channel)
            .with_unit(spec.unit_label.clone()))
    };
    let mut warnings = Vec::new();
    if spec.check_timestamps && cols.time.is_some() {
        if let Some(w) = timestamp_warning(&time, spec.sample_rate_hz, spec.time_unit_s) {
            warnings.push(w);
        }
    }
    Ok(LoadedRecording {
        horizontal: cols
            .horizontal
            .map(|_| make(horizontal, Channel::Horizontal))
            .transpose()?,
        vertical: cols
            .vertical
            .map(|_| make(vertical, Channel::Vertical))
            .transpose()?,
        time_s: cols.time.map(|_| {
            time.into_iter()
                .map(|t| t.map(|t| t * spec.time_unit_s))
                .collect()
        }),
        pupil: cols.pupil.map(|_| pupil),
        warnings,
        rows,
    })
}

/// Reads a `# sample_rate_hz=<rate>` declaration from the comment lines at
/// the top of a file, if there is one.
pub fn declared_sample_rate(path: impl AsRef<Path>) -> Result<Option<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let Some(comment) = line.trim().strip_prefix('#') else {
            break;
        };
        if let Some((key, value)) = comment.split_once('=') {
            if key.trim() == "sample_rate_hz" {
                return value.trim().parse().map(Some).map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: n as u64 + 1,
                    message: format!("invalid sample_rate_hz declaration '{}'", value.trim()),
                });
            }
        }
    }
    Ok(None)
}

fn csv_error(e: csv::Error, source: &Path) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(source, io),
        kind => Error::Parse {
            path: source.to_path_buf(),
            line,
            message: match kind {
                csv::ErrorKind::UnequalLengths {
                    expected_len, len, ..
                } => {
                    format!("expected {expected_len} fields, found {len}")
                }
                csv::ErrorKind::Utf8 { err, .. } => format!("invalid UTF-8: {err}"),
                other => format!("{other:?}"),
            },
        },
    }
}

/// Compares the mean timestamp spacing with the declared rate; more than 1%
/// disagreement yields a warning.
fn timestamp_warning(time: &[Option<f64>], sample_rate_hz: f64, unit_s: f64) -> Option<String> {
    let mut present = time
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.map(|t| (i, t)));
    let (i0, t0) = present.next()?;
    let (i1, t1) = present.next_back()?;
    if i1 == i0 {
        return None;
    }
    let dt = (t1 - t0) * unit_s / (i1 - i0) as f64;
    let implied = 1.0 / dt;
    let rel = (dt * sample_rate_hz - 1.0).abs();
    (rel > 0.01).then(|| {
        format!(
            "timestamps imply {implied:.3} Hz but the declared sample rate is {sample_rate_hz} Hz \
             ({:.2}% mismatch); using the declared rate",
            rel * 100.0
        )
    })
}
