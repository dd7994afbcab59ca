//! `rioneps` command-line tool.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad or inconsistent flags),
//! 2 for data errors (unreadable or malformed input, unwritable output).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "rioneps",
    version,
    about = "Detect oscillating pupil/CR-loss noise in eye-position traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Batch detection on a delimited-text recording.
    Detect(DetectArgs),
    /// Online detection: one sample per stdin line, `index,flag` lines out.
    Stream(StreamArgs),
    /// Generate a synthetic trace with optional labeled noise bursts.
    Synth(SynthArgs),
    /// Sweep thresholds against labeled data.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
struct DetectorArgs {
    /// Sample rate in Hz. May be omitted when the input file declares
    /// `# sample_rate_hz=<rate>` on a leading comment line.
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Inefficiency threshold; windows with IM above it are flagged.
    #[arg(long)]
    threshold: f64,
    /// Window size in samples, overriding floor(sample_rate / 20).
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Field delimiter (a single character, or `tab`).
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// Column mapping, e.g. `t=0,h=gaze_x,v=gaze_y,pupil=3`.
    #[arg(long)]
    columns: Option<String>,
    /// Extra comma-separated missing-data markers, e.g. `-9999,0`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    missing_values: Vec<String>,
    /// The input has no header row.
    #[arg(long)]
    no_header: bool,
    /// Warn if timestamps disagree with the sample rate by more than 1%.
    #[arg(long)]
    check_timestamps: bool,
    /// Seconds per unit of the time column (0.001 for milliseconds).
    #[arg(long, default_value_t = 1.0)]
    time_unit: f64,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Mask file; segments and stats files are written beside it.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    detector: DetectorArgs,
    /// h, v, both, or union (both plus their OR).
    #[arg(long, default_value = "h")]
    channel: String,
    #[arg(long)]
    segments: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the per-window IM series (default `<output stem>.im.csv`) and
    /// embed it in the stats file.
    #[arg(long)]
    emit_im: Option<Option<PathBuf>>,
    #[command(flatten)]
    ingest: IngestArgs,
}

#[derive(Debug, Args)]
struct StreamArgs {
    #[command(flatten)]
    detector: DetectorArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    /// Ground-truth labels file (`index,label`).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    sample_rate: f64,
    /// Duration in seconds.
    #[arg(long, default_value_t = 2.0)]
    duration: f64,
    /// Fixations as `position:dwell_seconds`, comma separated.
    #[arg(long, default_value = "0:0.4,8:0.4,-4:0.4", allow_hyphen_values = true)]
    fixations: String,
    #[arg(long, default_value_t = 30.0)]
    saccade_ms: f64,
    /// Fixation jitter standard deviation.
    #[arg(long, default_value_t = 0.01)]
    jitter: f64,
    /// RNG seed; a random one is chosen and printed if omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Noise intervals as inclusive `start:end` sample indices.
    #[arg(long, default_value = "")]
    bursts: String,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    offset: f64,
    #[arg(long, default_value_t = 0.5)]
    switch_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    missing_prob: f64,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    sample_rate: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    /// Threshold range `lo:hi:step`.
    #[arg(long)]
    thresholds: String,
    /// h or v.
    #[arg(long, default_value = "h")]
    channel: String,
    /// Sweep table output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    ingest: IngestArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Detect(args) => commands::detect(args),
        Command::Stream(args) => commands::stream(args),
        Command::Synth(args) => commands::synth(args),
        Command::Calibrate(args) => commands::calibrate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
