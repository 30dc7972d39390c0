#![allow(dead_code)] // each test binary uses its own slice of this module

//! Shared generators and brute-force grid oracles for the integration tests.
//!
//! The oracles deliberately avoid the library's closed forms: they classify
//! and score grid cells from the Shannon formula via cross-multiplied SINR
//! thresholds, so agreement between solver and oracle is meaningful. Keeping
//! divisions and logarithms out of the inner loops is what lets the large
//! sweeps finish inside their time budgets.

use d2dvid::channel::ChannelState;
use d2dvid::optimizer::{Priority, RateWindowPair};
use d2dvid::rate::RadioParams;
use rand::Rng;

/// Exponential(1) fading draw.
pub fn exp1(rng: &mut impl Rng) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}

/// Random channel with all five links Exponential(1).
pub fn random_channel(rng: &mut impl Rng) -> ChannelState {
    ChannelState {
        z11: exp1(rng),
        z12: exp1(rng),
        z21: exp1(rng),
        z22: exp1(rng),
        z23: exp1(rng),
    }
}

/// Random rate windows spanning all three priority classes: betas up to a few
/// times the bandwidth, alphas zero (no floor) about a third of the time.
pub fn random_windows(rng: &mut impl Rng, bandwidth: f64) -> RateWindowPair {
    let mut window = || {
        let beta = bandwidth * rng.gen_range(0.05..3.0);
        let alpha = if rng.gen_bool(0.3) {
            0.0
        } else {
            beta * rng.gen::<f64>()
        };
        (alpha, beta)
    };
    let (a1, b1) = window();
    let (a2, b2) = window();
    RateWindowPair::new(a1, b1, a2, b2)
}

/// `2^(x/bw) - 1`, the SINR a rate of `x` bits/s demands over `bw` Hz.
pub fn sinr_for_rate(x: f64, bw: f64) -> f64 {
    (x / bw * std::f64::consts::LN_2).exp_m1()
}

/// Best reuse-mode sum rate over an `n x n` power grid, restricted to cells
/// of the given priority class. Returns `None` when no grid cell falls in
/// that class.
///
/// Grid cells are classified by cross-multiplied SINR bounds (no division),
/// and the sum rate is maximized in product space `(1+sinr1)(1+sinr2)` as a
/// fraction, so each cell costs a handful of multiply-adds and the single
/// logarithm happens once at the end.
pub fn grid_best_reuse_in_class(
    p: &RadioParams,
    ch: &ChannelState,
    w: &RateWindowPair,
    class: Priority,
    n: usize,
) -> Option<f64> {
    let bw = p.bandwidth_reuse();
    let noise = p.noise_power(bw);
    let want_served = match class {
        Priority::BothServed => 2,
        Priority::OneServed => 1,
        Priority::NoneServed => 0,
    };

    // SINR windows for each receiver.
    let s_lo1 = sinr_for_rate(w.alpha1, bw);
    let s_hi1 = sinr_for_rate(w.beta1, bw);
    let s_lo2 = sinr_for_rate(w.alpha2, bw);
    let s_hi2 = sinr_for_rate(w.beta2, bw);

    // Column tables over p_b1; rows iterate p_d.
    let step_b = p.p_bmax / (n - 1) as f64;
    let step_d = p.p_dmax / (n - 1) as f64;
    let mut sig1 = vec![0.0f64; n]; // p_b1 * z11
    let mut int2 = vec![0.0f64; n]; // p_b1 * z12 + noise
    let mut lo2 = vec![0.0f64; n]; // served2 band on p_d * z22
    let mut hi2 = vec![0.0f64; n];
    for (j, s) in sig1.iter_mut().enumerate() {
        let p_b1 = j as f64 * step_b;
        *s = p_b1 * ch.z11;
        int2[j] = p_b1 * ch.z12 + noise;
        lo2[j] = s_lo2 * int2[j];
        hi2[j] = s_hi2 * int2[j];
    }

    // Best (1+sinr1)(1+sinr2) kept as a fraction num/den.
    let mut best_num = -1.0f64;
    let mut best_den = 1.0f64;
    let mut found = false;
    for i in 0..n {
        let p_d = i as f64 * step_d;
        let int1 = p_d * ch.z21 + noise; // C1's interference + noise
        let sig2 = p_d * ch.z22; // D2's signal on p_d * z22
        let lo1 = s_lo1 * int1;
        let hi1 = s_hi1 * int1;
        for j in 0..n {
            let served1 = sig1[j] >= lo1 && sig1[j] <= hi1;
            let served2 = sig2 >= lo2[j] && sig2 <= hi2[j];
            if served1 as u8 + served2 as u8 != want_served {
                continue;
            }
            let num = (int1 + sig1[j]) * (int2[j] + sig2);
            let den = int1 * int2[j];
            if !found || num * best_den > best_num * den {
                best_num = num;
                best_den = den;
                found = true;
            }
        }
    }
    found.then(|| bw * (best_num / best_den).log2())
}

/// Best cellular-mode sum rate over `n`-point per-power grids subject to the
/// beta ceilings and the power caps. The three powers decouple: `R1` depends
/// only on `p_b1`, and `R2 = min(uplink(p_d), downlink(p_b2))`, so the joint
/// grid maximum is assembled from three 1-D scans.
pub fn grid_best_cellular(
    p: &RadioParams,
    ch: &ChannelState,
    w: &RateWindowPair,
    n: usize,
) -> f64 {
    let bw = p.bandwidth_cellular();
    let noise = p.noise_power(bw);
    let scan = |cap: f64, gain: f64, beta: f64| -> f64 {
        let mut best = 0.0f64;
        for i in 0..n {
            let power = cap * i as f64 / (n - 1) as f64;
            let r = bw * (power * gain / noise).ln_1p() / std::f64::consts::LN_2;
            if r <= beta && r > best {
                best = r;
            }
        }
        best
    };
    let r1 = scan(p.p_bmax, ch.z11, w.beta1);
    // max over the (p_b2, p_d) grid of min(downlink, uplink), each capped at
    // beta2 = min of the per-hop maxima.
    let down = scan(p.p_bmax, ch.z12, w.beta2);
    let up = scan(p.p_dmax, ch.z23, w.beta2);
    r1 + down.min(up)
}

/// Best dedicated-mode sum rate over `n`-point per-power grids subject to the
/// beta ceilings and the power caps; the two links are independent.
pub fn grid_best_dedicated(
    p: &RadioParams,
    ch: &ChannelState,
    w: &RateWindowPair,
    n: usize,
) -> f64 {
    let bw = p.bandwidth_dedicated();
    let noise = p.noise_power(bw);
    let scan = |cap: f64, gain: f64, beta: f64| -> f64 {
        let mut best = 0.0f64;
        for i in 0..n {
            let power = cap * i as f64 / (n - 1) as f64;
            let r = bw * (power * gain / noise).ln_1p() / std::f64::consts::LN_2;
            if r <= beta && r > best {
                best = r;
            }
        }
        best
    };
    scan(p.p_bmax, ch.z11, w.beta1) + scan(p.p_dmax, ch.z22, w.beta2)
}
