use std::fmt;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use rioneps::signal_io::{
    self, ChannelSelection, ColumnSelection, DetectionReport, IngestSpec, OutputPaths,
};
use rioneps::{
    generate, inject, parse_threshold_range, sweep, Channel, DetectorConfig, Fixation, LabelSet,
    NoiseInjection, StreamingDetector, SynthSpec,
};

use crate::{CalibrateArgs, DetectArgs, DetectorArgs, IngestArgs, StreamArgs, SynthArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<rioneps::Error> for CliError {
    fn from(e: rioneps::Error) -> Self {
        if e.is_config() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn data_io(path: &str, e: io::Error) -> CliError {
    CliError::Data(format!("{path}: {e}"))
}

fn resolve_rate(flag: Option<f64>, input: Option<&Path>) -> CliResult<f64> {
    if let Some(rate) = flag {
        return Ok(rate);
    }
    if let Some(path) = input {
        if let Some(rate) = signal_io::declared_sample_rate(path)? {
            return Ok(rate);
        }
    }
    Err(usage(
        "--sample-rate is required (the input does not declare a sample rate)",
    ))
}

fn detector_config(
    sample_rate: f64,
    threshold: f64,
    window: Option<usize>,
) -> CliResult<DetectorConfig> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(usage(format!(
            "--sample-rate must be positive, got {sample_rate}"
        )));
    }
    if threshold.is_nan() || threshold < 0.0 {
        return Err(usage(format!(
            "--threshold must be non-negative, got {threshold}"
        )));
    }
    if window.is_some_and(|w| w < 2) {
        return Err(usage("--window must be at least 2 (window size WS >= 2)"));
    }
    DetectorConfig::new(sample_rate, threshold, window).map_err(|e| {
        usage(format!(
            "--sample-rate {sample_rate}: {e}; window size WS >= 2 is required, pass --window"
        ))
    })
}

fn ingest_spec(args: &IngestArgs, sample_rate: f64) -> CliResult<IngestSpec> {
    let delimiter = match args.delimiter.as_str() {
        "tab" | "\\t" => b'\t',
        d if d.len() == 1 && d.is_ascii() => d.as_bytes()[0],
        d => {
            return Err(usage(format!(
                "--delimiter must be one ASCII character or 'tab', got '{d}'"
            )))
        }
    };
    if !(args.time_unit.is_finite() && args.time_unit > 0.0) {
        return Err(usage(format!(
            "--time-unit must be positive, got {}",
            args.time_unit
        )));
    }
    let mut spec = IngestSpec::new(sample_rate).with_missing_markers(&args.missing_values);
    spec.delimiter = delimiter;
    spec.has_header = !args.no_header;
    spec.check_timestamps = args.check_timestamps;
    spec.time_unit_s = args.time_unit;
    if let Some(cols) = &args.columns {
        let map = cols.parse().map_err(|e| usage(format!("--columns: {e}")))?;
        spec.columns = ColumnSelection::Explicit(map);
    }
    Ok(spec)
}

pub fn detect(args: DetectArgs) -> CliResult {
    let DetectorArgs {
        sample_rate,
        threshold,
        window,
    } = args.detector;
    let selection: ChannelSelection = args
        .channel
        .parse()
        .map_err(|e| usage(format!("--channel: {e}")))?;
    let sample_rate = resolve_rate(sample_rate, Some(&args.input))?;
    let config = detector_config(sample_rate, threshold, window)?;
    let spec = ingest_spec(&args.ingest, sample_rate)?;

    let recording = signal_io::load_trace(&args.input, &spec)?;
    let report = DetectionReport::build(&recording, &config, selection)?;

    let mut paths = OutputPaths::beside(&args.output);
    if let Some(p) = args.segments {
        paths.segments = Some(p);
    }
    if let Some(p) = args.stats {
        paths.stats = Some(p);
    }
    let emit_im = args.emit_im.is_some();
    if let Some(p) = args.emit_im {
        paths.im_series = Some(p.unwrap_or_else(|| paths.default_im_series()));
    }
    signal_io::write_outputs(&report, &paths, emit_im)?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.channels {
        println!(
            "{}: {} of {} samples flagged ({:.2}%), {} segments, max IM {}",
            c.channel.short_name(),
            c.summary.flagged_count,
            report.sample_count,
            c.summary.fraction_flagged * 100.0,
            c.segments.len(),
            c.summary.max_im
        );
    }
    Ok(())
}

/// Parses one `stream` input line; empty or `NaN` means missing.
fn parse_stream_sample(line: &str) -> Option<Result<Option<f64>, ()>> {
    let s = line.trim();
    if s.starts_with('#') {
        return None;
    }
    if s.is_empty() || s.eq_ignore_ascii_case("nan") {
        return Some(Ok(None));
    }
    Some(
        s.parse::<f64>()
            .map(|v| v.is_finite().then_some(v))
            .map_err(|_| ()),
    )
}

pub fn stream(args: StreamArgs) -> CliResult {
    let DetectorArgs {
        sample_rate,
        threshold,
        window,
    } = args.detector;
    let sample_rate = resolve_rate(sample_rate, None)?;
    let config = detector_config(sample_rate, threshold, window)?;
    let mut detector = StreamingDetector::new(config);

    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let write = |out: &mut BufWriter<_>, flags: Vec<(usize, bool)>| -> CliResult {
        if flags.is_empty() {
            return Ok(());
        }
        for (i, f) in flags {
            writeln!(out, "{i},{}", u8::from(f)).map_err(|e| data_io("stdout", e))?;
        }
        out.flush().map_err(|e| data_io("stdout", e))
    };
    for (n, line) in stdin.lock().lines().enumerate() {
        let line = line.map_err(|e| data_io("stdin", e))?;
        let sample = match parse_stream_sample(&line) {
            None => continue,
            Some(Ok(s)) => s,
            Some(Err(())) => {
                // Emit what is final so far before failing.
                write(&mut out, detector.flush())?;
                return Err(CliError::Data(format!(
                    "stdin:{}: cannot parse '{}' as a sample",
                    n + 1,
                    line.trim()
                )));
            }
        };
        write(&mut out, detector.push(sample))?;
    }
    write(&mut out, detector.flush())
}

fn parse_fixations(s: &str) -> CliResult<Vec<Fixation>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (pos, dwell) = p
                .split_once(':')
                .ok_or_else(|| usage(format!("--fixations: '{p}' is not position:dwell")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("--fixations: '{v}' is not a number")))
            };
            Ok(Fixation {
                position: num(pos)?,
                dwell_s: num(dwell)?,
            })
        })
        .collect()
}

fn parse_bursts(s: &str) -> CliResult<Vec<(usize, usize)>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| usage(format!("--bursts: '{p}' is not start:end")))?;
            let idx = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| usage(format!("--bursts: '{v}' is not a sample index")))
            };
            Ok((idx(a)?, idx(b)?))
        })
        .collect()
}

pub fn synth(args: SynthArgs) -> CliResult {
    let seed = match args.seed {
        Some(s) => s,
        None => {
            let s = rand::random::<u64>();
            eprintln!("seed: {s}");
            s
        }
    };
    let spec = SynthSpec {
        sample_rate_hz: args.sample_rate,
        duration_s: args.duration,
        fixations: parse_fixations(&args.fixations)?,
        saccade_duration_s: args.saccade_ms / 1000.0,
        jitter_sd: args.jitter,
        seed,
    };
    let clean = generate(&spec)
        .map_err(|e| usage(format!("synth: {e}")))?
        .with_channel(Channel::Horizontal);
    let bursts = parse_bursts(&args.bursts)?;
    let mut injection = NoiseInjection::new(bursts, args.offset, args.switch_prob);
    injection.missing_probability = args.missing_prob;
    // A distinct stream for the noise so that the clean trace does not
    // depend on the burst layout.
    let (trace, labels) = inject(&clean, &injection, seed ^ 0x9E37_79B9_7F4A_7C15)
        .map_err(|e| usage(format!("--bursts: {e}")))?;

    signal_io::write_trace(&args.output, &[&trace])?;
    if let Some(p) = &args.labels {
        signal_io::write_labels(p, &labels)?;
    }
    println!(
        "wrote {} samples ({} labeled noisy) to {}",
        trace.len(),
        labels.positive_count(),
        args.output.display()
    );
    Ok(())
}

pub fn calibrate(args: CalibrateArgs) -> CliResult {
    let channel = match args.channel.as_str() {
        "h" | "horizontal" => Channel::Horizontal,
        "v" | "vertical" => Channel::Vertical,
        other => {
            return Err(usage(format!(
                "--channel must be h or v for calibrate, got '{other}'"
            )))
        }
    };
    let thresholds =
        parse_threshold_range(&args.thresholds).map_err(|e| usage(format!("--thresholds: {e}")))?;
    let sample_rate = resolve_rate(args.sample_rate, Some(&args.input))?;
    let config = detector_config(sample_rate, 0.0, args.window)?;
    let spec = ingest_spec(&args.ingest, sample_rate)?;

    let recording = signal_io::load_trace(&args.input, &spec)?;
    let trace = match channel {
        Channel::Vertical => recording.vertical,
        _ => recording.horizontal,
    }
    .ok_or_else(|| CliError::Data(format!("{}: no {channel:?} column", args.input.display())))?;
    let labels: LabelSet = signal_io::read_labels(&args.labels)?;

    let result = sweep(&trace, &labels, &config, &thresholds)?;
    if let Some(p) = &args.output {
        signal_io::write_sweep(p, &result)?;
    }
    let best = result.best_row();
    println!(
        "best threshold {} (tolerant F1 {:.4}, precision {:.4}, recall {:.4}; strict F1 {:.4})",
        best.threshold,
        best.tolerant.f1,
        best.tolerant.precision,
        best.tolerant.recall,
        best.strict.f1
    );
    Ok(())
}
