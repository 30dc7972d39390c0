//! Run configuration: a small TOML document with one section per concern.
//!
//! ```toml
//! [traces]
//! c1 = "news.txt"       # paths resolve relative to the config file
//! d2 = "sports.txt"
//!
//! [radio]
//! bandwidth_hz = 1e6
//! noise_density = 1e-6
//! p_bmax_db = 2.0       # dB fields are converted to linear exactly once,
//! p_dmax_db = 0.0       # here at parse time
//!
//! [fading]
//! seed = 1
//! g11 = 1.0
//! g12 = 0.5
//! g21 = 0.5
//! g22 = 2.0
//! g23 = 0.5
//!
//! [buffer]
//! factor = 1.5
//! prefetch_slots = 0
//!
//! [sim]
//! # forced_mode = "reuse"   # omit to select per slot
//! shared_fading = true      # seed sweeps reuse one seed list per strategy
//!
//! [output]
//! dir = "out"
//! # zoom_start = 6360       # inclusive slot range for the curve export;
//! # zoom_end = 6380         # omit both to export every slot
//! ```
//!
//! Every section and key is optional except the two trace paths. Unknown keys
//! are rejected so typos fail loudly. Validation gathers *all* problems into
//! one report instead of stopping at the first.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::channel::FadingConfig;
use crate::rate::{Mode, RadioParams};
use crate::sim::Scenario;
use crate::trace::{load_trace, TraceError};

// --- raw document -----------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    traces: RawTraces,
    #[serde(default)]
    radio: RawRadio,
    #[serde(default)]
    fading: RawFading,
    #[serde(default)]
    buffer: RawBuffer,
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraces {
    c1: PathBuf,
    d2: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawRadio {
    bandwidth_hz: f64,
    noise_density: f64,
    p_bmax_db: f64,
    p_dmax_db: f64,
}

impl Default for RawRadio {
    fn default() -> Self {
        RawRadio {
            bandwidth_hz: 1.0e6,
            noise_density: 1.0e-6,
            p_bmax_db: 2.0,
            p_dmax_db: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawFading {
    seed: u64,
    g11: f64,
    g12: f64,
    g21: f64,
    g22: f64,
    g23: f64,
}

impl Default for RawFading {
    fn default() -> Self {
        RawFading {
            seed: 1,
            g11: 1.0,
            g12: 0.5,
            g21: 0.5,
            g22: 2.0,
            g23: 0.5,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawBuffer {
    factor: f64,
    prefetch_slots: u32,
}

impl Default for RawBuffer {
    fn default() -> Self {
        RawBuffer {
            factor: 1.5,
            prefetch_slots: 0,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSim {
    forced_mode: Option<String>,
    shared_fading: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOutput {
    dir: Option<PathBuf>,
    zoom_start: Option<u32>,
    zoom_end: Option<u32>,
}

// --- resolved configuration -------------------------------------------------

/// A parsed and unit-converted run configuration. Power caps are linear here;
/// dB never leaves this module.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub trace_c1: PathBuf,
    pub trace_d2: PathBuf,
    pub radio: RadioParams,
    pub fading: FadingConfig,
    pub buffer_factor: f64,
    pub prefetch_slots: u32,
    pub forced_mode: Option<Mode>,
    /// Seed sweeps give every strategy the same fading realizations when set
    /// (common random numbers); unset decouples them.
    pub shared_fading: bool,
    pub output_dir: PathBuf,
    /// Inclusive slot range for the cumulative-curve export; `None` exports
    /// the whole run.
    pub zoom: Option<(u32, u32)>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Parses `text` as a config document. Relative trace paths are resolved
/// against `base_dir` (the config file's directory), so a config can sit next
/// to its traces. All semantic violations are gathered and reported together.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: base_dir.join("<config>"),
        source: Box::new(e),
    })?;
    resolve(raw, base_dir)
}

/// Reads and parses a config file; see [`parse_config`].
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        source: Box::new(e),
    })?;
    let base_dir = path.parent().unwrap_or(Path::new("."));
    resolve(raw, base_dir)
}

fn resolve(raw: RawConfig, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let mut problems = Vec::new();

    let resolve_path = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base_dir.join(p)
        }
    };
    let trace_c1 = resolve_path(&raw.traces.c1);
    let trace_d2 = resolve_path(&raw.traces.d2);
    for p in [&trace_c1, &trace_d2] {
        if !p.is_file() {
            problems.push(format!("trace file not found: {}", p.display()));
        }
    }

    for (key, v) in [
        ("radio.bandwidth_hz", raw.radio.bandwidth_hz),
        ("radio.noise_density", raw.radio.noise_density),
    ] {
        if !(v.is_finite() && v > 0.0) {
            problems.push(format!("{key} must be positive and finite, got {v}"));
        }
    }
    for (key, v) in [
        ("radio.p_bmax_db", raw.radio.p_bmax_db),
        ("radio.p_dmax_db", raw.radio.p_dmax_db),
    ] {
        if !v.is_finite() {
            problems.push(format!("{key} must be finite, got {v}"));
        }
    }
    for (key, v) in [
        ("fading.g11", raw.fading.g11),
        ("fading.g12", raw.fading.g12),
        ("fading.g21", raw.fading.g21),
        ("fading.g22", raw.fading.g22),
        ("fading.g23", raw.fading.g23),
    ] {
        if !(v.is_finite() && v > 0.0) {
            problems.push(format!("{key} must be positive and finite, got {v}"));
        }
    }
    if !(raw.buffer.factor.is_finite() && raw.buffer.factor > 0.0) {
        problems.push(format!(
            "buffer.factor must be positive and finite, got {}",
            raw.buffer.factor
        ));
    }

    let forced_mode = match &raw.sim.forced_mode {
        None => None,
        Some(s) => match s.parse::<Mode>() {
            Ok(m) => Some(m),
            Err(e) => {
                problems.push(format!("sim.forced_mode: {e}"));
                None
            }
        },
    };

    let zoom = match (raw.output.zoom_start, raw.output.zoom_end) {
        (None, None) => None,
        (Some(a), Some(b)) => {
            if a > b {
                problems.push(format!("empty export range: zoom_start {a} > zoom_end {b}"));
                None
            } else {
                Some((a, b))
            }
        }
        _ => {
            problems.push(
                "output.zoom_start and output.zoom_end must be given together".to_string(),
            );
            None
        }
    };

    if !problems.is_empty() {
        return Err(ConfigError::Invalid(problems));
    }

    Ok(RunConfig {
        trace_c1,
        trace_d2,
        radio: RadioParams {
            bandwidth: raw.radio.bandwidth_hz,
            noise_density: raw.radio.noise_density,
            p_bmax: db_to_linear(raw.radio.p_bmax_db),
            p_dmax: db_to_linear(raw.radio.p_dmax_db),
        },
        fading: FadingConfig {
            seed: raw.fading.seed,
            mean_gain: [
                raw.fading.g11,
                raw.fading.g12,
                raw.fading.g21,
                raw.fading.g22,
                raw.fading.g23,
            ],
        },
        buffer_factor: raw.buffer.factor,
        prefetch_slots: raw.buffer.prefetch_slots,
        forced_mode,
        shared_fading: raw.sim.shared_fading.unwrap_or(true),
        output_dir: raw
            .output
            .dir
            .map(|d| resolve_path(&d))
            .unwrap_or_else(|| base_dir.join("out")),
        zoom,
    })
}

impl RunConfig {
    /// Loads both traces and assembles the scenario this config describes.
    /// Checks that a configured zoom range fits inside the run.
    pub fn build_scenario(&self) -> Result<Scenario, ConfigError> {
        let trace_c1 = load_trace(&self.trace_c1)?;
        let trace_d2 = load_trace(&self.trace_d2)?;
        let scenario = Scenario {
            trace_c1,
            trace_d2,
            radio: self.radio,
            fading: self.fading,
            buffer_factor: self.buffer_factor,
            prefetch_slots: self.prefetch_slots,
            forced_mode: self.forced_mode,
        };

        let mut problems = Vec::new();
        if let Err(more) = scenario.validate() {
            problems.extend(more);
        }
        if let Some((_, end)) = self.zoom {
            let horizon = scenario.trace_c1.len().max(scenario.trace_d2.len())
                + self.prefetch_slots as usize;
            if end as usize > horizon {
                problems.push(format!(
                    "output.zoom_end {end} is past the end of the run ({horizon} slots)"
                ));
            }
        }
        if problems.is_empty() {
            Ok(scenario)
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }
}

// --- tests ------------------------------------------------------------------
