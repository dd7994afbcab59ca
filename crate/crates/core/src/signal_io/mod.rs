//! Delimited-text ingestion of recorded traces and export of detection
//! results.
//!
//! All numeric output uses Rust's shortest round-trip formatting, so a value
//! written and read back compares equal. Missing samples are written as
//! `NaN`. The exact file layouts are documented in the repository README.

mod export;
mod ingest;
mod report;

pub use export::{
    read_im_series, read_labels, read_mask, read_stats, write_im_series, write_labels,
    write_outputs, write_sweep, write_trace, ChannelStatsEntry, OutputPaths, StatsConfigEcho,
    StatsFile,
};
pub use ingest::{
    declared_sample_rate, load_trace, read_trace, ColumnMap, ColumnRef, ColumnSelection,
    IngestSpec, LoadedRecording,
};
pub use report::{ChannelReport, ChannelSelection, DetectionReport, WindowSummary};
