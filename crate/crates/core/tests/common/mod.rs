//! Test-only reference implementations, written directly from the
//! per-sample loop definition and kept independent of the library's
//! window kernel.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleWindow {
    pub tdt: f64,
    pub datcf: f64,
    pub valid_count: usize,
    pub im: f64,
}

/// One window, computed the slow way: find the first and last present
/// samples, walk the pairs between them, skip any pair touching a missing
/// sample, then divide by the number of present samples.
pub fn oracle_window(pv: &[Option<f64>], start: usize, ws: usize) -> OracleWindow {
    let window = &pv[start..start + ws];
    let nan_count = window.iter().filter(|s| s.is_none()).count();
    let valid_count = ws - nan_count;

    let lead = window.iter().take_while(|s| s.is_none()).count();
    let trail = if lead == ws {
        0
    } else {
        window.iter().rev().take_while(|s| s.is_none()).count()
    };

    let mut tdt = 0.0;
    let mut datcf = 0.0;
    if lead < ws {
        for j in (start + 1 + lead)..(start + ws - trail) {
            match (pv[j - 1], pv[j]) {
                (Some(a), Some(b)) => {
                    tdt += (b - a).abs();
                    datcf += b - a;
                }
                _ => continue,
            }
        }
    }
    let datcf = f64::abs(datcf);
    if valid_count < 2 {
        return OracleWindow {
            tdt: 0.0,
            datcf: 0.0,
            valid_count,
            im: 0.0,
        };
    }
    let mut im = (tdt - datcf) * 1000.0 / valid_count as f64;
    if im < 0.0 {
        im = 0.0;
    }
    OracleWindow {
        tdt,
        datcf,
        valid_count,
        im,
    }
}

pub fn oracle_series(pv: &[Option<f64>], ws: usize) -> Vec<OracleWindow> {
    if pv.len() < ws {
        return Vec::new();
    }
    (0..=pv.len() - ws)
        .map(|s| oracle_window(pv, s, ws))
        .collect()
}

/// Flags `j` iff some window containing `j` has IM above the threshold.
pub fn oracle_mask(pv: &[Option<f64>], ws: usize, threshold: f64) -> Vec<bool> {
    let series = oracle_series(pv, ws);
    (0..pv.len())
        .map(|j| {
            let lo = j.saturating_sub(ws - 1);
            (lo..=j)
                .filter(|&s| s < series.len())
                .any(|s| series[s].im > threshold)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random-walk trace with occasional noise bursts and missing samples.
pub fn random_trace(rng: &mut ChaCha8Rng, len: usize, missing: f64) -> Vec<Option<f64>> {
    let mut x: f64 = rng.random_range(-20.0..20.0);
    let mut out = Vec::with_capacity(len);
    let mut burst_left = 0usize;
    let mut state = false;
    let amp: f64 = rng.random_range(0.5..5.0);
    for _ in 0..len {
        x += rng.random_range(-0.05..0.05);
        if rng.random_bool(0.02) {
            x += rng.random_range(-5.0..5.0);
        }
        if burst_left == 0 && rng.random_bool(0.005) {
            burst_left = rng.random_range(10..120);
        }
        let mut v = x;
        if burst_left > 0 {
            burst_left -= 1;
            if rng.random_bool(0.5) {
                state = !state;
            }
            if state {
                v += amp;
            }
        }
        out.push(if rng.random_bool(missing) {
            None
        } else {
            Some(v)
        });
    }
    out
}

/// `|a - b| <= rel * max(|a|, |b|)`.
pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}
