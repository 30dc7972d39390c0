//! VBR video traces and the playout-buffer feasibility curves derived from them.
//!
//! A stored video is a sequence of frame sizes (bits) played back at a fixed
//! frame rate. One simulation slot is one frame interval, `tau = 1/frame_rate`
//! seconds. Streaming the video through a finite receiver buffer pins the
//! cumulative bits the sender may have delivered by the end of each slot
//! between two staircase curves:
//!
//! * the consumption curve `U(t)` — bits the decoder has consumed by slot `t`;
//!   a schedule that falls behind it underflows (playback misses a frame),
//! * the overflow curve `O(t) = min(U(t-1) + b, U(L))` with `U(-1) = 0` —
//!   one buffer `b` ahead of what had been consumed a slot earlier, capped at
//!   the total video size; a schedule that gets ahead of it would overrun the
//!   receiver buffer.
//!
//! A cumulative transmission curve `A(t)` is feasible precisely when
//! `U(t) <= A(t) <= O(t)` holds at every slot. [`BufferCurves::rate_window`]
//! converts that sandwich into the per-slot rate interval `[alpha, beta]` the
//! link optimizer works with, and [`BufferCurves::advance`] steps `A` forward
//! for an achieved rate, recording underflow and clip events.

use std::fmt;
use std::io;
use std::path::Path;

use thiserror::Error;

/// Relative tolerance used when advancing `A(t)`: a delivery that lands within
/// this fraction of a curve value snaps onto the curve, so "transmit exactly
/// beta" reproduces `A(t) = O(t)` (and alpha reproduces `U(t)`) without float
/// dust turning into spurious underflow or clip events.
const SNAP_REL: f64 = 1e-9;

// --- trace parsing ----------------------------------------------------------

/// Errors produced while reading a trace file.
///
/// Parsing is fail-closed: any malformed line aborts the load with the
/// 1-based line number it came from.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("trace is empty: expected a frame-rate line followed by frame sizes")]
    Empty,
    #[error("line {line}: invalid frame rate {value:?} (expected a positive decimal)")]
    BadFrameRate { line: usize, value: String },
    #[error("line {line}: invalid frame size {value:?} (expected a non-negative integer)")]
    BadFrameSize { line: usize, value: String },
    #[error("trace has a frame-rate line but no frames")]
    NoFrames,
}

/// A stored VBR video: fixed frame rate plus one size per frame, in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTrace {
    frame_rate: f64,
    frames: Vec<u64>,
}

impl VideoTrace {
    /// Builds a trace from parts. `frame_rate` must be finite and positive and
    /// at least one frame must be present; zero-size frames are legal.
    pub fn new(frame_rate: f64, frames: Vec<u64>) -> Result<Self, TraceError> {
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(TraceError::BadFrameRate {
                line: 1,
                value: frame_rate.to_string(),
            });
        }
        if frames.is_empty() {
            return Err(TraceError::NoFrames);
        }
        Ok(Self { frame_rate, frames })
    }

    /// Frames per second.
    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    /// Slot length in seconds (one frame interval).
    pub fn tau(&self) -> f64 {
        1.0 / self.frame_rate
    }

    /// Number of frames `L`; playback spans slots `1..=L`.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frame sizes in bits.
    pub fn frames(&self) -> &[u64] {
        &self.frames
    }

    /// Largest single frame, in bits.
    pub fn max_frame_bits(&self) -> u64 {
        self.frames.iter().copied().max().unwrap_or(0)
    }

    /// Total video size `U(L)` in bits.
    pub fn total_bits(&self) -> u64 {
        self.frames.iter().sum()
    }

    /// Mean frame size in bits.
    pub fn mean_frame_bits(&self) -> f64 {
        self.total_bits() as f64 / self.len() as f64
    }

    /// Returns a copy with `slots` zero-size frames prepended. Playback of the
    /// real frames then starts `slots` frame intervals late, which gives the
    /// sender that much lead time to prefetch into the buffer.
    pub fn with_prefetch(&self, slots: u32) -> VideoTrace {
        if slots == 0 {
            return self.clone();
        }
        let mut frames = vec![0u64; slots as usize];
        frames.extend_from_slice(&self.frames);
        VideoTrace {
            frame_rate: self.frame_rate,
            frames,
        }
    }
}

impl fmt::Display for VideoTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} frames @ {} fps, {} bits total",
            self.len(),
            self.frame_rate,
            self.total_bits()
        )
    }
}

/// Parses trace text: first non-comment line is the frame rate (decimal),
/// every following line one frame size in bits (non-negative integer).
/// `#` starts a comment, blank lines are skipped, and both LF and CRLF line
/// endings are accepted.
pub fn parse_trace(text: &str) -> Result<VideoTrace, TraceError> {
    let mut frame_rate: Option<f64> = None;
    let mut frames: Vec<u64> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }

        match frame_rate {
            None => {
                let parsed = line.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0);
                match parsed {
                    Some(v) => frame_rate = Some(v),
                    None => {
                        return Err(TraceError::BadFrameRate {
                            line: line_no,
                            value: line.to_string(),
                        })
                    }
                }
            }
            Some(_) => match line.parse::<u64>() {
                Ok(size) => frames.push(size),
                Err(_) => {
                    return Err(TraceError::BadFrameSize {
                        line: line_no,
                        value: line.to_string(),
                    })
                }
            },
        }
    }

    match frame_rate {
        None => Err(TraceError::Empty),
        Some(rate) => {
            if frames.is_empty() {
                return Err(TraceError::NoFrames);
            }
            VideoTrace::new(rate, frames)
        }
    }
}

/// Reads and parses a trace file.
pub fn load_trace(path: impl AsRef<Path>) -> Result<VideoTrace, TraceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TraceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trace(&text)
}

// --- feasibility curves -----------------------------------------------------

/// Consumption and overflow curves of one video behind a buffer of `b` bits.
///
/// Curve values are exact integers stored as `f64` (bit counts fit well inside
/// the 2^53 integer range), indexed by slot `0..=L`. `U` is nondecreasing with
/// `U(0) = 0`; `O` is nondecreasing with `O(L) = U(L)`, and `O(t) >= U(t)`
/// holds everywhere whenever `b` is at least the largest frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferCurves {
    tau: f64,
    buffer_bits: f64,
    u: Vec<f64>,
    o: Vec<f64>,
}

/// Outcome of advancing the transmission curve across one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotAdvance {
    /// New cumulative delivered bits `A(t)`, clipped at `O(t)`.
    pub a: f64,
    /// Bits actually delivered this slot (post-clip).
    pub delivered: f64,
    /// `A(t) < U(t)`: the decoder was short of frame `t`. Playback does not
    /// stall; the schedule keeps going and the miss is counted.
    pub underflow: bool,
    /// The offered bits exceeded the buffer room and were clipped at `O(t)`.
    pub clipped: bool,
    /// Bits discarded by the clip (0 when `clipped` is false).
    pub clipped_bits: f64,
}

impl BufferCurves {
    /// Slot length in seconds.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Buffer size `b` in bits.
    pub fn buffer_bits(&self) -> f64 {
        self.buffer_bits
    }

    /// Number of playback slots `L`.
    pub fn len(&self) -> usize {
        self.u.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Consumption curve value `U(t)`, `0 <= t <= L`.
    pub fn u(&self, t: usize) -> f64 {
        self.u[t]
    }

    /// Overflow curve value `O(t)`, `0 <= t <= L`.
    pub fn o(&self, t: usize) -> f64 {
        self.o[t]
    }

    /// Total video size `U(L)`.
    pub fn total_bits(&self) -> f64 {
        *self.u.last().unwrap()
    }

    /// Feasible rate window for slot `t` given `A(t-1)`.
    ///
    /// `alpha = max(0, U(t) - A(t-1)) / tau` is the slowest rate that still
    /// delivers frame `t` on time; `beta = (O(t) - A(t-1)) / tau` is the
    /// fastest rate the buffer can absorb. Along any schedule that has stayed
    /// at or below `O`, `beta >= 0` and `alpha <= beta` (the latter whenever
    /// the buffer holds at least the largest frame).
    pub fn rate_window(&self, t: usize, a_prev: f64) -> (f64, f64) {
        let alpha = ((self.u[t] - a_prev) / self.tau).max(0.0);
        let beta = (self.o[t] - a_prev) / self.tau;
        (alpha, beta)
    }

    /// Advances the transmission curve across slot `t` at `rate` bits/s:
    /// `A(t) = A(t-1) + rate * tau`, clipped at `O(t)`.
    ///
    /// Deliveries landing within [`SNAP_REL`] of `O(t)` or `U(t)` snap onto
    /// the curve value, so rates computed from the window bounds reproduce the
    /// bounds exactly.
    pub fn advance(&self, t: usize, a_prev: f64, rate: f64) -> SlotAdvance {
        let u_t = self.u[t];
        let o_t = self.o[t];
        let offered = rate * self.tau;
        let tol = SNAP_REL * o_t.abs().max(1.0);

        let raw = a_prev + offered;
        let clipped = raw > o_t + tol;
        let mut a = if raw > o_t || o_t - raw <= tol {
            o_t
        } else if (raw - u_t).abs() <= tol && u_t >= a_prev {
            u_t
        } else {
            raw
        };
        // Snapping never moves A backwards past the previous value.
        if a < a_prev {
            a = a_prev;
        }

        SlotAdvance {
            a,
            delivered: a - a_prev,
            underflow: a < u_t,
            clipped,
            clipped_bits: if clipped { raw - o_t } else { 0.0 },
        }
    }
}

/// Builds the curve pair for `trace` behind a buffer of `buffer_bits` bits.
pub fn build_curves(trace: &VideoTrace, buffer_bits: f64) -> BufferCurves {
    let l = trace.len();
    let mut u = Vec::with_capacity(l + 1);
    u.push(0.0);
    let mut acc = 0u64;
    for &f in trace.frames() {
        acc += f;
        u.push(acc as f64);
    }
    let total = acc as f64;

    // O(t) = min(U(t-1) + b, U(L)), taking U(-1) = 0 for the t = 0 entry.
    let mut o = Vec::with_capacity(l + 1);
    o.push(buffer_bits.min(total));
    for t in 1..=l {
        o.push((u[t - 1] + buffer_bits).min(total));
    }

    BufferCurves {
        tau: trace.tau(),
        buffer_bits,
        u,
        o,
    }
}

// --- synthetic traces -------------------------------------------------------

/// Parameters for [`synthetic_trace`]: log-normal frame sizes with periodic
/// oversized key frames, a crude but serviceable stand-in for VBR video.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticTraceSpec {
    pub frame_rate: f64,
    pub frames: usize,
    /// Median frame size in bits (the log-normal location).
    pub median_frame_bits: f64,
    /// Log-domain standard deviation; around 0.5-1.0 gives a heavy tail.
    pub sigma: f64,
    /// Every `key_interval`-th frame is scaled by `key_scale` (0 disables).
    pub key_interval: usize,
    pub key_scale: f64,
}

impl Default for SyntheticTraceSpec {
    fn default() -> Self {
        Self {
            frame_rate: 30.0,
            frames: 5000,
            median_frame_bits: 4.0e4,
            sigma: 0.7,
            key_interval: 12,
            key_scale: 2.5,
        }
    }
}

/// Generates a deterministic synthetic VBR trace from `seed`.
pub fn synthetic_trace(spec: &SyntheticTraceSpec, seed: u64) -> VideoTrace {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, LogNormal};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_median = spec.median_frame_bits.max(1.0).ln();
    let dist = LogNormal::new(log_median, spec.sigma).expect("sigma must be finite");
    let frames: Vec<u64> = (0..spec.frames)
        .map(|i| {
            let mut bits = dist.sample(&mut rng);
            if spec.key_interval > 0 && i % spec.key_interval == 0 {
                bits *= spec.key_scale;
            }
            // Tiny uniform jitter keeps exact ties out of the key-frame comb.
            bits *= 1.0 + 0.01 * rng.gen::<f64>();
            bits.round().max(0.0) as u64
        })
        .collect();
    VideoTrace::new(spec.frame_rate, frames).expect("synthetic spec yields a valid trace")
}

// --- tests ------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rate_line_then_frames() {
        let tr = parse_trace("30\n1000\n2000\n1500\n").unwrap();
        assert_eq!(tr.frame_rate(), 30.0);
        assert_eq!(tr.frames(), &[1000, 2000, 1500]);
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.max_frame_bits(), 2000);
        assert_eq!(tr.total_bits(), 4500);
    }

    #[test]
    fn accepts_crlf_comments_and_blank_lines() {
        let tr = parse_trace("# captured clip\r\n29.97\r\n\r\n100 # key frame\r\n50\r\n").unwrap();
        assert_eq!(tr.frame_rate(), 29.97);
        assert_eq!(tr.frames(), &[100, 50]);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(parse_trace(""), Err(TraceError::Empty)));
        assert!(matches!(parse_trace("# nothing\n\n"), Err(TraceError::Empty)));
    }

    #[test]
    fn rate_line_without_frames_is_rejected() {
        assert!(matches!(parse_trace("30\n"), Err(TraceError::NoFrames)));
    }

    #[test]
    fn negative_frame_size_names_the_line() {
        match parse_trace("30\n100\n-5\n") {
            Err(TraceError::BadFrameSize { line, value }) => {
                assert_eq!(line, 3);
                assert_eq!(value, "-5");
            }
            other => panic!("expected BadFrameSize, got {other:?}"),
        }
    }

    #[test]
    fn bad_frame_rate_names_the_line() {
        match parse_trace("fps=30\n100\n") {
            Err(TraceError::BadFrameRate { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected BadFrameRate, got {other:?}"),
        }
        assert!(matches!(
            parse_trace("0\n100\n"),
            Err(TraceError::BadFrameRate { .. })
        ));
        assert!(matches!(
            parse_trace("-30\n100\n"),
            Err(TraceError::BadFrameRate { .. })
        ));
    }

    #[test]
    fn load_trace_reports_missing_file_path() {
        let err = load_trace("/nonexistent/clip.trace").unwrap_err();
        match err {
            TraceError::Io { path, .. } => assert!(path.contains("/nonexistent/clip.trace")),
            other => panic!("expected Io, got {other:?}"),
        }
    }

    #[test]
    fn curves_follow_consumption_and_shifted_buffer_bound() {
        let tr = VideoTrace::new(30.0, vec![100, 200, 100]).unwrap();
        let c = build_curves(&tr, 300.0);
        assert_eq!(c.len(), 3);
        assert_eq!((c.u(0), c.u(1), c.u(2), c.u(3)), (0.0, 100.0, 300.0, 400.0));
        // O(t) = min(U(t-1) + b, U(L)) with U(-1) = 0.
        assert_eq!((c.o(0), c.o(1), c.o(2), c.o(3)), (300.0, 300.0, 400.0, 400.0));
    }

    #[test]
    fn overflow_curve_is_capped_at_total_size() {
        let tr = VideoTrace::new(30.0, vec![100]).unwrap();
        let c = build_curves(&tr, 1.0e9);
        assert_eq!((c.o(0), c.o(1)), (100.0, 100.0));
    }

    #[test]
    fn overflow_curve_stays_at_or_above_consumption_when_buffer_covers_largest_frame() {
        let tr = VideoTrace::new(30.0, vec![100, 100]).unwrap();
        let c = build_curves(&tr, 100.0);
        assert_eq!((c.o(0), c.o(1), c.o(2)), (100.0, 100.0, 200.0));
        for t in 0..=c.len() {
            assert!(c.o(t) >= c.u(t), "O({t}) < U({t})");
        }
    }

    #[test]
    fn rate_window_scales_backlog_by_slot_length() {
        let tr = VideoTrace::new(30.0, vec![300, 100]).unwrap();
        let c = build_curves(&tr, 400.0);
        // U(1) = 300, O(1) = 400, A(0) = 100 consumed nothing yet... feed A directly.
        let (alpha, beta) = c.rate_window(1, 100.0);
        assert_eq!(alpha, 6000.0);
        assert_eq!(beta, 9000.0);
    }

    #[test]
    fn rate_window_is_zero_width_when_pinned_to_the_curves() {
        let tr = VideoTrace::new(1.0, vec![400]).unwrap();
        let c = build_curves(&tr, 1.0e9); // O(1) capped at 400
        let (alpha, beta) = c.rate_window(1, 400.0);
        assert_eq!((alpha, beta), (0.0, 0.0));
    }

    #[test]
    fn rate_window_clamps_negative_backlog_to_zero() {
        let tr = VideoTrace::new(30.0, vec![100, 100]).unwrap();
        let c = build_curves(&tr, 200.0);
        // A(0) = 150 is already past U(1) = 100: no minimum rate required.
        let (alpha, beta) = c.rate_window(1, 150.0);
        assert_eq!(alpha, 0.0);
        assert!((beta - (200.0 - 150.0) * 30.0).abs() < 1e-9);
    }

    #[test]
    fn advance_at_alpha_lands_exactly_on_consumption_curve() {
        let tr = VideoTrace::new(30.0, vec![300, 100]).unwrap();
        let c = build_curves(&tr, 400.0);
        let (alpha, _) = c.rate_window(1, 100.0);
        let step = c.advance(1, 100.0, alpha);
        assert_eq!(step.a, c.u(1));
        assert!(!step.underflow);
        assert!(!step.clipped);
    }

    #[test]
    fn advance_at_beta_lands_exactly_on_overflow_curve() {
        let tr = VideoTrace::new(30.0, vec![300, 100]).unwrap();
        let c = build_curves(&tr, 400.0);
        let (_, beta) = c.rate_window(1, 100.0);
        let step = c.advance(1, 100.0, beta);
        assert_eq!(step.a, c.o(1));
        assert!(!step.underflow);
        assert!(!step.clipped, "delivering exactly beta is not a clip");
    }

    #[test]
    fn advance_clips_excess_delivery_and_counts_it() {
        let tr = VideoTrace::new(30.0, vec![300, 100]).unwrap();
        let c = build_curves(&tr, 400.0);
        let step = c.advance(1, 100.0, 12000.0); // offers 400 bits, room is 300
        assert_eq!(step.a, 400.0);
        assert!(step.clipped);
        assert!((step.clipped_bits - 100.0).abs() < 1e-9);
        assert_eq!(step.delivered, 300.0);
        assert!(!step.underflow);
    }

    #[test]
    fn advance_counts_underflow_without_stalling() {
        let tr = VideoTrace::new(30.0, vec![300, 100]).unwrap();
        let c = build_curves(&tr, 400.0);
        let step = c.advance(1, 100.0, 3000.0); // delivers 100, U(1) = 300
        assert_eq!(step.a, 200.0);
        assert!(step.underflow);
        assert!(!step.clipped);
        // The next window resumes from the advanced A, not from a stall point.
        let (alpha2, _) = c.rate_window(2, step.a);
        assert_eq!(alpha2, (400.0 - 200.0) * 30.0);
    }

    #[test]
    fn advance_at_exactly_consumption_is_not_underflow() {
        let tr = VideoTrace::new(30.0, vec![300]).unwrap();
        let c = build_curves(&tr, 400.0);
        let step = c.advance(1, 0.0, 9000.0); // exactly 300 = U(1)
        assert_eq!(step.a, 300.0);
        assert!(!step.underflow);
    }

    #[test]
    fn prefetch_prepends_silent_slots() {
        let tr = VideoTrace::new(30.0, vec![100, 200]).unwrap();
        let p = tr.with_prefetch(2);
        assert_eq!(p.frames(), &[0, 0, 100, 200]);
        assert_eq!(p.frame_rate(), 30.0);
        let c = build_curves(&p, 250.0);
        assert_eq!((c.u(1), c.u(2), c.u(3)), (0.0, 0.0, 100.0));
        // The sender may fill the buffer during the silent lead-in.
        assert_eq!(c.o(1), 250.0);
        assert_eq!(tr.with_prefetch(0), tr);
    }

    #[test]
    fn synthetic_trace_is_deterministic_and_heavy_tailed() {
        let spec = SyntheticTraceSpec {
            frames: 2000,
            ..SyntheticTraceSpec::default()
        };
        let a = synthetic_trace(&spec, 7);
        let b = synthetic_trace(&spec, 7);
        assert_eq!(a, b);
        let c = synthetic_trace(&spec, 8);
        assert_ne!(a, c);

        let mean = a.mean_frame_bits();
        let max = a.max_frame_bits() as f64;
        assert!(mean > 0.0);
        // Key frames plus the log-normal tail should push the peak well past the mean.
        assert!(max > 3.0 * mean, "max {max} vs mean {mean}");
    }
}
