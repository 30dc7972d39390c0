//! Achievable rates for the three spectrum-sharing modes.
//!
//! The cell owns `B` Hz. Serving both the cellular user C1 and the D2D
//! receiver D2 splits it differently per mode:
//!
//! * **Cellular** - D2 is relayed through the base station, so three
//!   orthogonal channels are needed (downlink to C1, uplink D1->BS, downlink
//!   BS->D2), each `B/3` wide. D2's rate is the min of its two relay hops.
//! * **Dedicated** - the D2D pair talks directly on its own channel; two
//!   orthogonal channels of `B/2` each.
//! * **Reuse** - both transmissions share the full `B` and interfere: C1
//!   hears D1, and D2 hears the base station. Rates are Shannon with SINR
//!   instead of SNR.
//!
//! All rates are `bandwidth * log2(1 + signal/noise)` in bits/s, computed via
//! `ln_1p` so that tiny SNRs and the power<->rate round trip stay accurate.

use crate::channel::ChannelState;

use std::f64::consts::LN_2;

/// One transmit-power assignment (linear units, not dB).
///
/// `p_b1`: base-station power toward C1. `p_b2`: base-station power on the
/// relay downlink toward D2 (cellular mode only). `p_d`: D1's transmit power.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerVector {
    pub p_b1: f64,
    pub p_b2: f64,
    pub p_d: f64,
}

/// Per-receiver achievable rates in bits/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatePair {
    /// Rate toward the cellular user C1.
    pub r1: f64,
    /// Rate toward the D2D receiver D2.
    pub r2: f64,
}

impl RatePair {
    pub fn total(&self) -> f64 {
        self.r1 + self.r2
    }
}

/// Spectrum-sharing mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cellular = 0,
    Dedicated = 1,
    Reuse = 2,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Cellular, Mode::Dedicated, Mode::Reuse];

    pub fn label(&self) -> &'static str {
        match self {
            Mode::Cellular => "cellular",
            Mode::Dedicated => "dedicated",
            Mode::Reuse => "reuse",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cellular" => Ok(Mode::Cellular),
            "dedicated" => Ok(Mode::Dedicated),
            "reuse" => Ok(Mode::Reuse),
            other => Err(format!(
                "unknown mode {other:?} (expected cellular, dedicated, or reuse)"
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Static radio-layer parameters: total bandwidth, one-sided noise density,
/// and the peak powers of the base station and the D2D transmitter (linear).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub bandwidth: f64,
    pub noise_density: f64,
    pub p_bmax: f64,
    pub p_dmax: f64,
}

impl RadioParams {
    /// Channel width in cellular mode: `B/3`.
    pub fn bandwidth_cellular(&self) -> f64 {
        self.bandwidth / 3.0
    }

    /// Channel width in dedicated mode: `B/2`.
    pub fn bandwidth_dedicated(&self) -> f64 {
        self.bandwidth / 2.0
    }

    /// Channel width in reuse mode: the full band.
    pub fn bandwidth_reuse(&self) -> f64 {
        self.bandwidth
    }

    /// Noise power over a channel of width `bw`.
    pub fn noise_power(&self, bw: f64) -> f64 {
        self.noise_density * bw
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if !(self.noise_density.is_finite() && self.noise_density > 0.0) {
            return Err(format!(
                "noise density must be positive, got {}",
                self.noise_density
            ));
        }
        for (name, p) in [("p_bmax", self.p_bmax), ("p_dmax", self.p_dmax)] {
            if !(p.is_finite() && p >= 0.0) {
                return Err(format!("{name} must be finite and non-negative, got {p}"));
            }
        }
        Ok(())
    }
}

// --- Shannon helpers --------------------------------------------------------

/// `bw * log2(1 + signal/noise)` bits/s. `noise` must be positive.
pub fn shannon_rate(bw: f64, signal: f64, noise: f64) -> f64 {
    bw * (signal / noise).ln_1p() / LN_2
}

/// Inverse of [`shannon_rate`] for the transmit power: the power that achieves
/// `rate` over a gain-`gain` link against `noise`, i.e. `(2^(rate/bw) - 1) *
/// noise / gain`. A zero target needs no power regardless of the gain.
pub fn shannon_power(bw: f64, rate: f64, gain: f64, noise: f64) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    pow2m1(rate / bw) * noise / gain
}

/// `2^x - 1`, accurate near zero.
pub fn pow2m1(x: f64) -> f64 {
    (x * LN_2).exp_m1()
}

// --- per-mode rates ---------------------------------------------------------

/// Cellular mode: three `B/3` channels, D2 served via the BS relay.
pub fn rates_cellular(p: &RadioParams, ch: &ChannelState, pw: &PowerVector) -> RatePair {
    let bw = p.bandwidth_cellular();
    let noise = p.noise_power(bw);
    let r1 = shannon_rate(bw, pw.p_b1 * ch.z11, noise);
    let uplink = shannon_rate(bw, pw.p_d * ch.z23, noise);
    let downlink = shannon_rate(bw, pw.p_b2 * ch.z12, noise);
    RatePair {
        r1,
        r2: uplink.min(downlink),
    }
}

/// Dedicated mode: two `B/2` channels, D1 transmits straight to D2.
pub fn rates_dedicated(p: &RadioParams, ch: &ChannelState, pw: &PowerVector) -> RatePair {
    let bw = p.bandwidth_dedicated();
    let noise = p.noise_power(bw);
    RatePair {
        r1: shannon_rate(bw, pw.p_b1 * ch.z11, noise),
        r2: shannon_rate(bw, pw.p_d * ch.z22, noise),
    }
}

/// Reuse mode: both links share the full band and see each other as
/// interference.
pub fn rates_reuse(p: &RadioParams, ch: &ChannelState, pw: &PowerVector) -> RatePair {
    let bw = p.bandwidth_reuse();
    let noise = p.noise_power(bw);
    RatePair {
        r1: shannon_rate(bw, pw.p_b1 * ch.z11, pw.p_d * ch.z21 + noise),
        r2: shannon_rate(bw, pw.p_d * ch.z22, pw.p_b1 * ch.z12 + noise),
    }
}

/// Rates under `mode` for one power assignment.
pub fn rates(mode: Mode, p: &RadioParams, ch: &ChannelState, pw: &PowerVector) -> RatePair {
    match mode {
        Mode::Cellular => rates_cellular(p, ch, pw),
        Mode::Dedicated => rates_dedicated(p, ch, pw),
        Mode::Reuse => rates_reuse(p, ch, pw),
    }
}

// --- tests ------------------------------------------------------------------
