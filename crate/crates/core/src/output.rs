//! Results serialization: per-slot CSV, cumulative-curve CSV, buffer-
//! utilization CSV, and summary JSON.
//!
//! Every number is written with Rust's shortest round-trip formatting, so a
//! reader that parses a field back into `f64` recovers the exact bits. No
//! timestamps or other environment-dependent values are embedded; two runs of
//! the same scenario must produce byte-identical files.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::rate::Mode;
use crate::sim::{buffer_utilization, Receiver, SimulationResult, Summary};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot serialize {what}: {source}")]
    Json {
        what: &'static str,
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// --- per-slot CSV -----------------------------------------------------------

const SLOT_COLUMNS: &[&str] = &[
    "t",
    "mode",
    "priority",
    "p_b1",
    "p_b2",
    "p_d",
    "r1",
    "r2",
    "alpha1",
    "beta1",
    "alpha2",
    "beta2",
    "a1",
    "a2",
    "u1",
    "u2",
    "underflow_c1",
    "underflow_d2",
    "clip_c1",
    "clip_d2",
    "clipped_bits_c1",
    "clipped_bits_d2",
];

const LOCKSTEP_COLUMNS: &[&str] = &[
    "cellular_priority",
    "cellular_total_rate",
    "dedicated_priority",
    "dedicated_total_rate",
    "reuse_priority",
    "reuse_total_rate",
];

/// Writes the slot log. Selection runs carry six extra columns recording what
/// each mode would have achieved from the same pre-slot state; forced runs
/// solved only their own mode and omit them.
pub fn write_slots_csv(path: &Path, result: &SimulationResult) -> Result<(), OutputError> {
    let lockstep = result.records.first().is_some_and(|r| r.per_mode.is_some());
    let mut w = csv::Writer::from_path(path).map_err(|e| OutputError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;

    let mut header: Vec<&str> = SLOT_COLUMNS.to_vec();
    if lockstep {
        header.extend_from_slice(LOCKSTEP_COLUMNS);
    }
    w.write_record(&header).map_err(|e| OutputError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;

    for rec in &result.records {
        let mut row: Vec<String> = vec![
            rec.t.to_string(),
            rec.mode.label().to_string(),
            rec.priority.to_string(),
            rec.p_b1.to_string(),
            rec.p_b2.to_string(),
            rec.p_d.to_string(),
            rec.r1.to_string(),
            rec.r2.to_string(),
            rec.alpha1.to_string(),
            rec.beta1.to_string(),
            rec.alpha2.to_string(),
            rec.beta2.to_string(),
            rec.a1.to_string(),
            rec.a2.to_string(),
            rec.u1.to_string(),
            rec.u2.to_string(),
            rec.underflow_c1.to_string(),
            rec.underflow_d2.to_string(),
            rec.clip_c1.to_string(),
            rec.clip_d2.to_string(),
            rec.clipped_bits_c1.to_string(),
            rec.clipped_bits_d2.to_string(),
        ];
        if let Some(per_mode) = &rec.per_mode {
            for outcome in per_mode {
                row.push(outcome.priority.to_string());
                row.push(outcome.total_rate.to_string());
            }
        }
        w.write_record(&row).map_err(|e| OutputError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

// --- cumulative curves ------------------------------------------------------

/// Writes `receiver,t,u,a,o` rows for slots in the inclusive `zoom` range
/// (whole run when `None`). A receiver whose video ended before the range
/// keeps reporting its frozen end-of-video values, so both receivers always
/// contribute the same number of rows.
pub fn write_curves_csv(
    path: &Path,
    result: &SimulationResult,
    zoom: Option<(u32, u32)>,
) -> Result<(), OutputError> {
    let horizon = result.records.len() as u32;
    let (start, end) = zoom.unwrap_or((0, horizon));
    let mut w = csv::Writer::from_path(path).map_err(|e| OutputError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    w.write_record(["receiver", "t", "u", "a", "o"])
        .map_err(|e| OutputError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
    for r in Receiver::ALL {
        let curves = result.curves(r);
        let l = curves.len();
        for t in start..=end {
            let i = (t as usize).min(l);
            let a = result.delivered(r, (t as usize).min(result.records.len()));
            w.write_record([
                r.label().to_string(),
                t.to_string(),
                curves.u(i).to_string(),
                a.to_string(),
                curves.o(i).to_string(),
            ])
            .map_err(|e| OutputError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e),
            })?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

// --- buffer utilization -----------------------------------------------------

/// Writes `receiver,t,raw,clamped` for every playback slot. `raw` may dip
/// below zero while the schedule is behind consumption; `clamped` is the
/// `[0, 1]` view used in reports.
pub fn write_utilization_csv(path: &Path, result: &SimulationResult) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| OutputError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    w.write_record(["receiver", "t", "raw", "clamped"])
        .map_err(|e| OutputError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
    for r in Receiver::ALL {
        for (i, raw) in buffer_utilization(result, r).iter().enumerate() {
            w.write_record([
                r.label().to_string(),
                (i + 1).to_string(),
                raw.to_string(),
                raw.clamp(0.0, 1.0).to_string(),
            ])
            .map_err(|e| OutputError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e),
            })?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

// --- summary JSON -----------------------------------------------------------

/// Strategy names as they appear in summaries: the three pinned modes plus
/// per-slot selection.
pub fn strategy_label(forced: Option<Mode>) -> &'static str {
    match forced {
        Some(m) => m.label(),
        None => "selection",
    }
}

#[derive(Debug, Serialize)]
struct RunDoc<'a> {
    strategy: &'static str,
    seed: u64,
    #[serde(flatten)]
    summary: &'a Summary,
}

/// Writes the single-run summary document.
pub fn write_summary_json(
    path: &Path,
    summary: &Summary,
    strategy: Option<Mode>,
    seed: u64,
) -> Result<(), OutputError> {
    let doc = RunDoc {
        strategy: strategy_label(strategy),
        seed,
        summary,
    };
    write_json(path, &doc, "run summary")
}

pub fn write_json<T: Serialize>(
    path: &Path,
    doc: &T,
    what: &'static str,
) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|source| OutputError::Json {
        what,
        source,
    })?;
    text.push('\n');
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

/// Writes the full per-run file set into `dir`: `slots.csv`, `curves.csv`,
/// `utilization.csv`, and `summary.json`.
pub fn emit_run(
    dir: &Path,
    result: &SimulationResult,
    zoom: Option<(u32, u32)>,
    strategy: Option<Mode>,
    seed: u64,
) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_slots_csv(&dir.join("slots.csv"), result)?;
    write_curves_csv(&dir.join("curves.csv"), result, zoom)?;
    write_utilization_csv(&dir.join("utilization.csv"), result)?;
    write_summary_json(&dir.join("summary.json"), &result.summary, strategy, seed)?;
    Ok(())
}

// --- aggregation ------------------------------------------------------------

/// Mean, sample standard deviation, and a normal-approximation 95% half-width
/// over a seed sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricAggregate {
    pub mean: f64,
    pub std: f64,
    pub ci95: f64,
}

impl MetricAggregate {
    pub fn from_samples(samples: &[f64]) -> MetricAggregate {
        let n = samples.len();
        if n == 0 {
            return MetricAggregate {
                mean: f64::NAN,
                std: f64::NAN,
                ci95: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return MetricAggregate {
                mean,
                std: 0.0,
                ci95: 0.0,
            };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        MetricAggregate {
            mean,
            std,
            ci95: 1.96 * std / (n as f64).sqrt(),
        }
    }
}

// --- tests ------------------------------------------------------------------
