use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn rioneps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rioneps"))
        .args(args)
        .output()
        .expect("run rioneps")
}

fn rioneps_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_rioneps"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn rioneps");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a 500 Hz `t,x,y` file with an alternating burst on x.
fn write_burst_file(path: &Path) {
    let mut text = String::from("t,x,y\n");
    for i in 0..400 {
        let x = if (150..=200).contains(&i) {
            if i % 2 == 0 {
                2.0
            } else {
                -2.0
            }
        } else {
            1.0
        };
        let x = if i == 50 {
            "NaN".to_string()
        } else {
            x.to_string()
        };
        text.push_str(&format!("{},{x},0.5\n", i as f64 / 500.0));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn detect_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.csv");
    write_burst_file(&input);
    let mask = dir.path().join("mask.csv");
    let out = rioneps(&[
        "detect",
        "--input",
        p(&input),
        "--sample-rate",
        "500",
        "--threshold",
        "100",
        "--channel",
        "h",
        "--output",
        p(&mask),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(out.status.code(), Some(0));

    let mask_text = fs::read_to_string(&mask).unwrap();
    assert_eq!(mask_text.lines().next(), Some("index,flag_h,flag_v"));
    assert_eq!(mask_text.lines().count(), 401);
    assert!(mask_text.contains("\n175,1,\n"));
    assert!(mask_text.contains("\n0,0,\n"));

    let segments = fs::read_to_string(dir.path().join("mask.segments.csv")).unwrap();
    let rows: Vec<&str> = segments.lines().collect();
    assert_eq!(
        rows[0],
        "channel,start_index,end_index,start_time_s,end_time_s,peak_im"
    );
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("h,"));

    let stats = rioneps::signal_io::read_stats(dir.path().join("mask.stats.json")).unwrap();
    assert_eq!(stats.config.window_size, 25);
    assert_eq!(stats.config.inefficiency_threshold, 100.0);
    assert_eq!(stats.sample_count, 400);
}

#[test]
fn emit_im_and_union() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.csv");
    write_burst_file(&input);
    let mask = dir.path().join("m.csv");
    let out = rioneps(&[
        "detect",
        "--input",
        p(&input),
        "--sample-rate",
        "500",
        "--threshold",
        "100",
        "--channel",
        "union",
        "--output",
        p(&mask),
        "--emit-im",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mask_text = fs::read_to_string(&mask).unwrap();
    assert_eq!(
        mask_text.lines().next(),
        Some("index,flag_h,flag_v,flag_union")
    );
    let im = rioneps::signal_io::read_im_series(dir.path().join("m.im.csv")).unwrap();
    assert_eq!(im.len(), 2 * (400 - 25 + 1));
    let stats = rioneps::signal_io::read_stats(dir.path().join("m.stats.json")).unwrap();
    assert_eq!(stats.channels.len(), 2);
    assert_eq!(stats.channels[0].im.as_ref().unwrap().len(), 376);
}

#[test]
fn low_sample_rate_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.csv");
    write_burst_file(&input);
    let out = rioneps(&[
        "detect",
        "--input",
        p(&input),
        "--sample-rate",
        "30",
        "--threshold",
        "100",
        "--output",
        p(&dir.path().join("m.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    assert!(msg.contains("WS >= 2"), "{msg}");
    assert!(msg.contains("--window"), "{msg}");

    let ok = rioneps(&[
        "detect",
        "--input",
        p(&input),
        "--sample-rate",
        "30",
        "--threshold",
        "100",
        "--window",
        "3",
        "--output",
        p(&dir.path().join("m.csv")),
    ]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
}

#[test]
fn usage_errors_exit_1() {
    let out = rioneps(&["detect", "--threshold", "100"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--input"));
    let out = rioneps(&["stream", "--sample-rate", "500"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--threshold"));
    let out = rioneps(&["bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(rioneps(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_data_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "t,x\n0,1\n0.002,oops\n").unwrap();
    let out = rioneps(&[
        "detect",
        "--input",
        p(&input),
        "--sample-rate",
        "500",
        "--threshold",
        "100",
        "--output",
        p(&dir.path().join("m.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("bad.csv:3"), "{msg}");

    let out = rioneps(&[
        "detect",
        "--input",
        p(&dir.path().join("missing.csv")),
        "--sample-rate",
        "500",
        "--threshold",
        "100",
        "--output",
        p(&dir.path().join("m.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = rioneps_stdin(
        &["stream", "--sample-rate", "500", "--threshold", "100"],
        "1\n2\nxyz\n",
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("stdin:3"));
}

#[test]
fn sentinel_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.tsv");
    let mut text = String::from("time\tgaze\n");
    for i in 0..60 {
        let v = if i % 7 == 0 {
            "-9999".to_string()
        } else {
            (i as f64 * 0.1).to_string()
        };
        text.push_str(&format!("{i}\t{v}\n"));
    }
    fs::write(&input, text).unwrap();
    let out = rioneps(&[
        "detect",
        "--input",
        p(&input),
        "--sample-rate",
        "500",
        "--threshold",
        "1",
        "--delimiter",
        "tab",
        "--columns",
        "t=time,h=gaze",
        "--missing-values",
        "-9999",
        "--time-unit",
        "0.002",
        "--check-timestamps",
        "--output",
        p(&dir.path().join("m.csv")),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    // Ramp with gaps is monotone: nothing flagged, and timestamps agree.
    let mask = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert!(!mask.contains(",1,"));
    assert!(!stderr(&out).contains("warning"));
}

#[test]
fn short_file_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("short.csv");
    fs::write(&input, "x\n0\n5\n0\n5\n").unwrap();
    let mask = dir.path().join("m.csv");
    let out = rioneps(&[
        "detect",
        "--input",
        p(&input),
        "--sample-rate",
        "500",
        "--threshold",
        "1",
        "--output",
        p(&mask),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(&mask).unwrap(),
        "index,flag_h,flag_v\n0,0,\n1,0,\n2,0,\n3,0,\n"
    );
    assert!(stderr(&out).contains("fewer than the window size"));
}

#[test]
fn stream_matches_batch_on_synthetic_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let labels = dir.path().join("labels.csv");
    let out = rioneps(&[
        "synth",
        "--sample-rate",
        "500",
        "--duration",
        "3",
        "--seed",
        "42",
        "--bursts",
        "200:299,800:869",
        "--missing-prob",
        "0.05",
        "--output",
        p(&trace),
        "--labels",
        p(&labels),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    // Batch, with the sample rate taken from the file's declaration.
    let mask = dir.path().join("mask.csv");
    let out = rioneps(&[
        "detect",
        "--input",
        p(&trace),
        "--threshold",
        "100",
        "--output",
        p(&mask),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (batch, _) = rioneps::signal_io::read_mask(&mask).unwrap();
    let batch = batch.unwrap();
    assert!(batch.flagged_count() > 0);

    // Stream the same x column one sample per line.
    let text = fs::read_to_string(&trace).unwrap();
    let samples: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| format!("{}\n", l.split(',').nth(1).unwrap()))
        .collect();
    let out = rioneps_stdin(
        &["stream", "--sample-rate", "500", "--threshold", "100"],
        &samples,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let streamed: Vec<bool> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let (idx, flag) = l.split_once(',').unwrap();
            assert_eq!(idx.parse::<usize>().unwrap(), i);
            flag == "1"
        })
        .collect();
    assert_eq!(streamed.as_slice(), batch.flags());
}

#[test]
fn synth_is_reproducible_and_reports_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = rioneps(&[
            "synth",
            "--sample-rate",
            "250",
            "--seed",
            "9",
            "--bursts",
            "10:60",
            "--output",
            p(path),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let out = rioneps(&[
        "synth",
        "--sample-rate",
        "250",
        "--output",
        p(&dir.path().join("c.csv")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).starts_with("seed: "));

    let out = rioneps(&[
        "synth",
        "--sample-rate",
        "250",
        "--seed",
        "1",
        "--bursts",
        "10:5000",
        "--output",
        p(&a),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn calibrate_finds_perfect_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let labels = dir.path().join("labels.csv");
    let out = rioneps(&[
        "synth",
        "--sample-rate",
        "500",
        "--duration",
        "4",
        "--seed",
        "3",
        "--bursts",
        "300:379,900:999",
        "--output",
        p(&trace),
        "--labels",
        p(&labels),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = dir.path().join("sweep.csv");
    let out = rioneps(&[
        "calibrate",
        "--input",
        p(&trace),
        "--labels",
        p(&labels),
        "--thresholds",
        "10:500:10",
        "--output",
        p(&table),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("tolerant F1 1.0000"), "{stdout}");
    let rows = fs::read_to_string(&table).unwrap();
    assert_eq!(rows.lines().count(), 51);
    assert!(rows.starts_with("threshold,predicted_positive,tp,fp,fn,tn,"));

    let out = rioneps(&[
        "calibrate",
        "--input",
        p(&trace),
        "--labels",
        p(&labels),
        "--thresholds",
        "10:5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
