//! The per-slot streaming simulation.
//!
//! One slot is one frame interval. Each slot the engine samples the channel,
//! reads both receivers' rate windows off their buffer curves, solves the
//! three sharing modes (or only a forced one), picks the mode, and advances
//! both cumulative transmission curves by the achieved rates. Underflow is
//! non-stalling: a missed frame is counted and the schedule keeps going.
//! Deliveries beyond the overflow curve are clipped at the buffer and counted
//! as clip events.
//!
//! Everything is a pure function of the [`Scenario`]: two runs with the same
//! scenario produce identical slot records, which is what makes seed-sharing
//! comparisons between strategies meaningful.

use serde::Serialize;
use thiserror::Error;

use crate::channel::{sample_slot, FadingConfig};
use crate::optimizer::{
    select_mode, solve_all, solve_cellular, solve_dedicated, solve_reuse, RateWindowPair,
};
use crate::rate::{Mode, RadioParams};
use crate::trace::{build_curves, BufferCurves, VideoTrace};

/// The two streaming receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    /// The cellular user.
    C1,
    /// The D2D receiver.
    D2,
}

impl Receiver {
    pub const ALL: [Receiver; 2] = [Receiver::C1, Receiver::D2];

    pub fn label(&self) -> &'static str {
        match self {
            Receiver::C1 => "c1",
            Receiver::D2 => "d2",
        }
    }
}

/// Full description of one simulation run.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Video consumed by the cellular user.
    pub trace_c1: VideoTrace,
    /// Video consumed by the D2D receiver.
    pub trace_d2: VideoTrace,
    pub radio: RadioParams,
    pub fading: FadingConfig,
    /// Receiver buffer, as a multiple of that video's largest frame.
    pub buffer_factor: f64,
    /// Silent lead-in slots before playback starts (sender may prefill).
    pub prefetch_slots: u32,
    /// Pin every slot to one mode instead of selecting per slot.
    pub forced_mode: Option<Mode>,
}

impl Scenario {
    /// Collects every constraint violation instead of stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        if let Err(e) = self.radio.validate() {
            problems.push(e);
        }
        if !(self.buffer_factor.is_finite() && self.buffer_factor > 0.0) {
            problems.push(format!(
                "buffer factor must be positive, got {}",
                self.buffer_factor
            ));
        }
        if self.trace_c1.frame_rate() != self.trace_d2.frame_rate() {
            problems.push(format!(
                "traces must share one frame rate (slots are frame intervals), got {} and {}",
                self.trace_c1.frame_rate(),
                self.trace_d2.frame_rate()
            ));
        }
        for (label, g) in [
            ("g11", self.fading.mean_gain[0]),
            ("g12", self.fading.mean_gain[1]),
            ("g21", self.fading.mean_gain[2]),
            ("g22", self.fading.mean_gain[3]),
            ("g23", self.fading.mean_gain[4]),
        ] {
            if !(g.is_finite() && g > 0.0) {
                problems.push(format!("mean gain {label} must be positive, got {g}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    /// Copy with a different fading seed (used by seed sweeps).
    pub fn with_seed(&self, seed: u64) -> Scenario {
        let mut s = self.clone();
        s.fading.seed = seed;
        s
    }

    /// Copy pinned to `mode` (or unpinned for `None`).
    pub fn with_forced_mode(&self, mode: Option<Mode>) -> Scenario {
        let mut s = self.clone();
        s.forced_mode = mode;
        s
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Priority and sum rate a single mode would have achieved in a slot, from
/// the same buffer state the selected decision was made in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeOutcome {
    pub priority: u8,
    pub total_rate: f64,
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub t: u32,
    /// Chosen (or forced) mode.
    pub mode: Mode,
    pub priority: u8,
    pub p_b1: f64,
    pub p_b2: f64,
    pub p_d: f64,
    pub r1: f64,
    pub r2: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    /// Cumulative delivered bits after this slot.
    pub a1: f64,
    pub a2: f64,
    /// Consumption-curve values at this slot (frozen at `U(L)` once a shorter
    /// video has ended).
    pub u1: f64,
    pub u2: f64,
    pub underflow_c1: bool,
    pub underflow_d2: bool,
    pub clip_c1: bool,
    pub clip_d2: bool,
    pub clipped_bits_c1: f64,
    pub clipped_bits_d2: f64,
    /// What each mode would have done this slot, in [`Mode::ALL`] order.
    /// `None` for forced runs (only the forced mode was solved).
    pub per_mode: Option<[ModeOutcome; 3]>,
}

/// Per-receiver tallies for a whole run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverSummary {
    /// Playback slots of this receiver's video (including prefetch lead-in).
    pub slots: u32,
    pub underflow_events: u32,
    /// Underflow events divided by playback slots.
    pub underflow_probability: f64,
    pub clip_events: u32,
    pub clipped_bits: f64,
    /// Mean of the buffer utilization `(A - U)/b`, clamped to `[0, 1]`,
    /// over this receiver's playback slots.
    pub mean_buffer_utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeHistogram {
    pub cellular: u32,
    pub dedicated: u32,
    pub reuse: u32,
}

/// Whole-run tallies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub slots: u32,
    pub c1: ReceiverSummary,
    pub d2: ReceiverSummary,
    pub mode_histogram: ModeHistogram,
    /// Mean per-slot sum rate in bits/s.
    pub mean_total_rate: f64,
}

/// Result of one run: the slot log, the tallies, and the curves the run was
/// measured against.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub records: Vec<SlotRecord>,
    pub summary: Summary,
    pub curves_c1: BufferCurves,
    pub curves_d2: BufferCurves,
}

impl SimulationResult {
    pub fn curves(&self, r: Receiver) -> &BufferCurves {
        match r {
            Receiver::C1 => &self.curves_c1,
            Receiver::D2 => &self.curves_d2,
        }
    }

    /// Cumulative delivered bits `A(t)` for a receiver; `t = 0` is 0.
    pub fn delivered(&self, r: Receiver, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            let rec = &self.records[t - 1];
            match r {
                Receiver::C1 => rec.a1,
                Receiver::D2 => rec.a2,
            }
        }
    }
}

/// Raw buffer-utilization series `(A(t) - U(t)) / b` for one receiver over
/// its playback slots `1..=L`. Negative values mean the schedule is behind
/// consumption (underflow territory); the report layer clamps to `[0, 1]`.
pub fn buffer_utilization(result: &SimulationResult, r: Receiver) -> Vec<f64> {
    let curves = result.curves(r);
    let b = curves.buffer_bits();
    (1..=curves.len())
        .map(|t| {
            let a = result.delivered(r, t.min(result.records.len()));
            if b > 0.0 {
                (a - curves.u(t)) / b
            } else {
                0.0
            }
        })
        .collect()
}

/// Runs the scenario to completion.
pub fn run(scenario: &Scenario) -> Result<SimulationResult, SimError> {
    scenario.validate().map_err(SimError::Invalid)?;

    let trace_c1 = scenario.trace_c1.with_prefetch(scenario.prefetch_slots);
    let trace_d2 = scenario.trace_d2.with_prefetch(scenario.prefetch_slots);
    let b1 = scenario.buffer_factor * trace_c1.max_frame_bits() as f64;
    let b2 = scenario.buffer_factor * trace_d2.max_frame_bits() as f64;
    let curves_c1 = build_curves(&trace_c1, b1);
    let curves_d2 = build_curves(&trace_d2, b2);

    let l1 = curves_c1.len();
    let l2 = curves_d2.len();
    let horizon = l1.max(l2);

    let mut a1 = 0.0f64;
    let mut a2 = 0.0f64;
    let mut records = Vec::with_capacity(horizon);

    for t in 1..=horizon {
        let ch = sample_slot(&scenario.fading, t as u64);

        // A finished video leaves a zero-width window so the optimizer parks
        // that link.
        let (alpha1, beta1) = if t <= l1 {
            curves_c1.rate_window(t, a1)
        } else {
            (0.0, 0.0)
        };
        let (alpha2, beta2) = if t <= l2 {
            curves_d2.rate_window(t, a2)
        } else {
            (0.0, 0.0)
        };
        let w = RateWindowPair::new(alpha1, beta1, alpha2, beta2);

        let (chosen, per_mode) = match scenario.forced_mode {
            Some(Mode::Cellular) => (solve_cellular(&scenario.radio, &ch, &w), None),
            Some(Mode::Dedicated) => (solve_dedicated(&scenario.radio, &ch, &w), None),
            Some(Mode::Reuse) => (solve_reuse(&scenario.radio, &ch, &w), None),
            None => {
                let all = solve_all(&scenario.radio, &ch, &w);
                let sel = select_mode(&all[0], &all[1], &all[2]);
                let outcomes = [
                    ModeOutcome {
                        priority: all[0].priority.rank(),
                        total_rate: all[0].total_rate(),
                    },
                    ModeOutcome {
                        priority: all[1].priority.rank(),
                        total_rate: all[1].total_rate(),
                    },
                    ModeOutcome {
                        priority: all[2].priority.rank(),
                        total_rate: all[2].total_rate(),
                    },
                ];
                (sel, Some(outcomes))
            }
        };

        let step1 = (t <= l1).then(|| curves_c1.advance(t, a1, chosen.rates.r1));
        let step2 = (t <= l2).then(|| curves_d2.advance(t, a2, chosen.rates.r2));
        if let Some(s) = &step1 {
            a1 = s.a;
        }
        if let Some(s) = &step2 {
            a2 = s.a;
        }

        records.push(SlotRecord {
            t: t as u32,
            mode: chosen.mode,
            priority: chosen.priority.rank(),
            p_b1: chosen.powers.p_b1,
            p_b2: chosen.powers.p_b2,
            p_d: chosen.powers.p_d,
            r1: chosen.rates.r1,
            r2: chosen.rates.r2,
            alpha1,
            beta1,
            alpha2,
            beta2,
            a1,
            a2,
            u1: curves_c1.u(t.min(l1)),
            u2: curves_d2.u(t.min(l2)),
            underflow_c1: step1.as_ref().is_some_and(|s| s.underflow),
            underflow_d2: step2.as_ref().is_some_and(|s| s.underflow),
            clip_c1: step1.as_ref().is_some_and(|s| s.clipped),
            clip_d2: step2.as_ref().is_some_and(|s| s.clipped),
            clipped_bits_c1: step1.as_ref().map_or(0.0, |s| s.clipped_bits),
            clipped_bits_d2: step2.as_ref().map_or(0.0, |s| s.clipped_bits),
            per_mode,
        });
    }

    let summary = summarize(&records, &curves_c1, &curves_d2);
    Ok(SimulationResult {
        records,
        summary,
        curves_c1,
        curves_d2,
    })
}

fn summarize(records: &[SlotRecord], curves_c1: &BufferCurves, curves_d2: &BufferCurves) -> Summary {
    let l1 = curves_c1.len();
    let l2 = curves_d2.len();

    let receiver_summary = |l: usize, curves: &BufferCurves, pick: &dyn Fn(&SlotRecord) -> (f64, bool, bool, f64)| {
        let mut underflow = 0u32;
        let mut clips = 0u32;
        let mut clipped_bits = 0.0f64;
        let mut util_sum = 0.0f64;
        let b = curves.buffer_bits();
        for rec in &records[..l] {
            let (a, uf, clip, cb) = pick(rec);
            if uf {
                underflow += 1;
            }
            if clip {
                clips += 1;
            }
            clipped_bits += cb;
            if b > 0.0 {
                let util = (a - curves.u(rec.t as usize)) / b;
                util_sum += util.clamp(0.0, 1.0);
            }
        }
        ReceiverSummary {
            slots: l as u32,
            underflow_events: underflow,
            underflow_probability: underflow as f64 / l as f64,
            clip_events: clips,
            clipped_bits,
            mean_buffer_utilization: util_sum / l as f64,
        }
    };

    let c1 = receiver_summary(l1, curves_c1, &|r| {
        (r.a1, r.underflow_c1, r.clip_c1, r.clipped_bits_c1)
    });
    let d2 = receiver_summary(l2, curves_d2, &|r| {
        (r.a2, r.underflow_d2, r.clip_d2, r.clipped_bits_d2)
    });

    let mut histogram = ModeHistogram {
        cellular: 0,
        dedicated: 0,
        reuse: 0,
    };
    let mut rate_sum = 0.0;
    for rec in records {
        match rec.mode {
            Mode::Cellular => histogram.cellular += 1,
            Mode::Dedicated => histogram.dedicated += 1,
            Mode::Reuse => histogram.reuse += 1,
        }
        rate_sum += rec.r1 + rec.r2;
    }

    Summary {
        slots: records.len() as u32,
        c1,
        d2,
        mode_histogram: histogram,
        mean_total_rate: rate_sum / records.len().max(1) as f64,
    }
}

// --- tests ------------------------------------------------------------------
