//! Per-slot transmit-power optimization and mode selection.
//!
//! Each slot hands the optimizer a rate window `[alpha_m, beta_m]` per
//! receiver (from the playout-buffer curves) and the slot's channel gains.
//! The goal is the schedule the streams can actually use: first serve as many
//! receivers as possible within their windows, then maximize the sum rate.
//!
//! A decision's **priority** says how many receivers ended up inside their
//! windows: 1 = both, 2 = exactly one, 3 = neither. Lower is better. Within
//! a priority class the sum rate `R1 + R2` breaks ties.
//!
//! Cellular and dedicated mode have no cross-coupling, so each link's optimum
//! is closed-form: push the rate to the smaller of the peak-power rate and
//! `beta`, then invert Shannon for the power. Reuse mode couples the links
//! through interference. Setting both rates to their `beta` targets yields a
//! 2x2 linear system in the powers; when that interior solution violates a
//! peak-power cap, the search moves to the boundary (one power pinned at its
//! cap) where each receiver's window constraints become an interval for the
//! remaining free power, and the sum rate - strictly quasiconvex along any
//! power axis - is maximized at an interval endpoint.

use crate::channel::ChannelState;
use crate::rate::{
    pow2m1, rates, rates_reuse, shannon_power, shannon_rate, Mode, PowerVector, RadioParams,
    RatePair,
};

/// Relative tolerance (scaled by `beta`) for "rate meets window bound"
/// comparisons, so solutions constructed to sit exactly on a bound classify
/// as satisfying it despite float rounding.
const WINDOW_REL_TOL: f64 = 1e-9;

// --- windows and decisions --------------------------------------------------

/// Per-receiver feasible rate windows for one slot, in bits/s.
///
/// `alpha` is already clamped at zero by the curve layer; `beta >= alpha`
/// holds whenever the buffer covers the largest frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateWindowPair {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
}

impl RateWindowPair {
    pub fn new(alpha1: f64, beta1: f64, alpha2: f64, beta2: f64) -> Self {
        Self {
            alpha1,
            beta1,
            alpha2,
            beta2,
        }
    }
}

/// How many receivers a decision keeps inside their rate windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Priority {
    /// Both receivers inside `[alpha, beta]`.
    BothServed = 1,
    /// Exactly one receiver inside its window.
    OneServed = 2,
    /// Neither receiver inside its window.
    NoneServed = 3,
}

impl Priority {
    pub fn rank(&self) -> u8 {
        *self as u8
    }
}

/// The optimizer's answer for one mode in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDecision {
    pub mode: Mode,
    pub powers: PowerVector,
    /// Rates actually achieved by `powers` under `mode` (re-evaluated through
    /// the rate model, so they are consistent with it by construction).
    pub rates: RatePair,
    pub priority: Priority,
}

impl PowerDecision {
    pub fn total_rate(&self) -> f64 {
        self.rates.total()
    }
}

/// Whether `rate` sits inside `[alpha, beta]`, with slack `1e-9 * beta` on
/// both ends.
fn in_window(rate: f64, alpha: f64, beta: f64) -> bool {
    let tol = WINDOW_REL_TOL * beta;
    rate >= alpha - tol && rate <= beta + tol
}

/// Classifies achieved rates against the slot's windows.
pub fn classify(rates: &RatePair, w: &RateWindowPair) -> Priority {
    let served1 = in_window(rates.r1, w.alpha1, w.beta1);
    let served2 = in_window(rates.r2, w.alpha2, w.beta2);
    match (served1, served2) {
        (true, true) => Priority::BothServed,
        (false, false) => Priority::NoneServed,
        _ => Priority::OneServed,
    }
}

fn decision(mode: Mode, p: &RadioParams, ch: &ChannelState, w: &RateWindowPair, pw: PowerVector) -> PowerDecision {
    let r = rates(mode, p, ch, &pw);
    PowerDecision {
        mode,
        powers: pw,
        rates: r,
        priority: classify(&r, w),
    }
}

// --- orthogonal modes -------------------------------------------------------

/// Cellular mode: C1 served directly, D2 relayed over the uplink D1->BS and
/// the downlink BS->D2, all on `B/3` channels.
///
/// Per link, the best in-window rate is `min(peak-power rate, beta)`; the
/// relay leg is additionally capped by its weaker hop. Powers come from
/// inverting Shannon at the chosen rate, with D1's uplink power balanced so
/// both relay hops run at exactly the same rate (no power wasted on the hop
/// that is not the bottleneck).
pub fn solve_cellular(p: &RadioParams, ch: &ChannelState, w: &RateWindowPair) -> PowerDecision {
    let bw = p.bandwidth_cellular();
    let noise = p.noise_power(bw);

    let r1 = shannon_rate(bw, p.p_bmax * ch.z11, noise).min(w.beta1);
    let p_b1 = shannon_power(bw, r1, ch.z11, noise).min(p.p_bmax);

    let uplink_cap = shannon_rate(bw, p.p_dmax * ch.z23, noise);
    let downlink_cap = shannon_rate(bw, p.p_bmax * ch.z12, noise);
    let r2 = uplink_cap.min(downlink_cap).min(w.beta2);
    let p_b2 = shannon_power(bw, r2, ch.z12, noise).min(p.p_bmax);
    // Matching the uplink rate to the downlink rate: P_d = (z12/z23) * P_b2.
    let p_d = if r2 > 0.0 {
        (p_b2 * ch.z12 / ch.z23).min(p.p_dmax)
    } else {
        0.0
    };

    decision(
        Mode::Cellular,
        p,
        ch,
        w,
        PowerVector { p_b1, p_b2, p_d },
    )
}

/// Dedicated mode: C1 and the direct D1->D2 link on `B/2` channels each.
pub fn solve_dedicated(p: &RadioParams, ch: &ChannelState, w: &RateWindowPair) -> PowerDecision {
    let bw = p.bandwidth_dedicated();
    let noise = p.noise_power(bw);

    let r1 = shannon_rate(bw, p.p_bmax * ch.z11, noise).min(w.beta1);
    let p_b1 = shannon_power(bw, r1, ch.z11, noise).min(p.p_bmax);

    let r2 = shannon_rate(bw, p.p_dmax * ch.z22, noise).min(w.beta2);
    let p_d = shannon_power(bw, r2, ch.z22, noise).min(p.p_dmax);

    decision(
        Mode::Dedicated,
        p,
        ch,
        w,
        PowerVector {
            p_b1,
            p_b2: 0.0,
            p_d,
        },
    )
}

// --- reuse mode -------------------------------------------------------------

/// Product `a * b` that treats a zero factor as an exact zero even when the
/// other factor has overflowed to infinity (large `beta/B` targets).
fn safe_prod(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Interior reuse solution: both rates pinned to their `beta` targets.
///
/// With `a_m = 2^(beta_m/B) - 1`, the two SINR equations are linear in the
/// powers and solve to
///
/// ```text
/// P_b1 = a1 (z22 + a2 z21) N0 B / D,   P_d = a2 (z11 + a1 z12) N0 B / D,
/// D = z11 z22 - a1 a2 z12 z21.
/// ```
///
/// Returns the pair only when the targets are jointly attainable: `D > 0` and
/// both powers inside `[0, cap]`. Otherwise `None`, and the caller falls back
/// to the boundary search.
pub fn solve_reuse_interior(
    p: &RadioParams,
    ch: &ChannelState,
    w: &RateWindowPair,
) -> Option<PowerVector> {
    let bw = p.bandwidth_reuse();
    let noise = p.noise_power(bw);
    let a1 = pow2m1(w.beta1 / bw);
    let a2 = pow2m1(w.beta2 / bw);

    let det = ch.z11 * ch.z22 - safe_prod(safe_prod(a1, a2), ch.z12 * ch.z21);
    let invertible = det.is_finite() && det > 0.0; // rejects NaN too
    if !invertible {
        return None;
    }

    let p_b1 = safe_prod(a1, ch.z22 + safe_prod(a2, ch.z21)) * noise / det;
    let p_d = safe_prod(a2, ch.z11 + safe_prod(a1, ch.z12)) * noise / det;
    let ok = p_b1.is_finite()
        && p_d.is_finite()
        && (0.0..=p.p_bmax).contains(&p_b1)
        && (0.0..=p.p_dmax).contains(&p_d);
    ok.then_some(PowerVector {
        p_b1,
        p_b2: 0.0,
        p_d,
    })
}

/// Which peak-power cap the boundary search pins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCase {
    /// `P_b1 = P_bmax`, D1's power free.
    BsPowerAtMax,
    /// `P_d = P_dmax`, the base station's power free.
    D2dPowerAtMax,
}

/// Feasible interval of the free power for a receiver whose rate *increases*
/// with it: `r(x) = B log2(1 + x g / q)` with `q` = interference + noise.
/// Returned interval is clamped to `[0, cap]`; empty when `lo > hi`.
fn interval_rate_increasing(bw: f64, g: f64, q: f64, alpha: f64, beta: f64, cap: f64) -> (f64, f64) {
    if g <= 0.0 {
        // Rate is stuck at zero: feasible everywhere iff the floor is zero.
        return if in_window(0.0, alpha, beta) {
            (0.0, cap)
        } else {
            (f64::INFINITY, f64::NEG_INFINITY)
        };
    }
    let lo = pow2m1(alpha / bw) * q / g;
    let hi = pow2m1(beta / bw) * q / g;
    (lo.max(0.0), hi.min(cap))
}

/// Feasible interval of the free power for a receiver whose rate *decreases*
/// with it (it is interference): `r(x) = B log2(1 + s / (x h + n))` with `s`
/// the fixed received signal power. Clamped to `[0, cap]`.
fn interval_rate_decreasing(
    bw: f64,
    s: f64,
    h: f64,
    n: f64,
    alpha: f64,
    beta: f64,
    cap: f64,
) -> (f64, f64) {
    if s <= 0.0 || h <= 0.0 {
        // No dependence on the free power: the window either holds or it does
        // not, at the fixed rate this link gets.
        let r = shannon_rate(bw, s.max(0.0), n);
        return if in_window(r, alpha, beta) {
            (0.0, cap)
        } else {
            (f64::INFINITY, f64::NEG_INFINITY)
        };
    }
    // r <= beta needs interference x >= (s / (2^(beta/B) - 1) - n) / h;
    // beta = 0 makes the requirement unattainable (infinite interference).
    let ab = pow2m1(beta / bw);
    let lo = if ab == 0.0 {
        f64::INFINITY
    } else {
        (s / ab - n) / h
    };
    // r >= alpha needs x <= (s / (2^(alpha/B) - 1) - n) / h; alpha = 0 is free.
    let aa = pow2m1(alpha / bw);
    let hi = if aa == 0.0 {
        f64::INFINITY
    } else {
        (s / aa - n) / h
    };
    (lo.max(0.0), hi.min(cap))
}

/// Boundary reuse search with one power pinned at its cap.
///
/// Each receiver's window constraints cut a closed interval of feasible
/// values for the free power (possibly empty). Three situations:
///
/// 1. the intervals intersect - both receivers can be served; the sum rate is
///    maximized at one of the intersection's endpoints;
/// 2. at least one interval is nonempty - one receiver can be served; the
///    best choice is among the four interval endpoints (those inside
///    `[0, cap]` that do serve a receiver);
/// 3. both empty - nobody can be served; all that is left is raw sum rate,
///    maximized at `0` or `cap` of the free power.
///
/// Endpoint evaluation suffices because the sum rate along any single power
/// axis is quasiconvex (decreasing, then increasing), so an interval's
/// maximum sits on its boundary. Ties prefer the later candidate, which makes
/// the pinned-plus-capped corner win degenerate cases.
pub fn solve_reuse_boundary(
    p: &RadioParams,
    ch: &ChannelState,
    w: &RateWindowPair,
    case: BoundaryCase,
) -> PowerDecision {
    let bw = p.bandwidth_reuse();
    let noise = p.noise_power(bw);

    // Interval of the free power allowed by each receiver's window.
    let (cap, (lo1, hi1), (lo2, hi2)) = match case {
        BoundaryCase::BsPowerAtMax => {
            let cap = p.p_dmax;
            // C1's rate falls as D1's power rises (interference).
            let c1 = interval_rate_decreasing(
                bw,
                p.p_bmax * ch.z11,
                ch.z21,
                noise,
                w.alpha1,
                w.beta1,
                cap,
            );
            // D2's rate grows with D1's power against fixed BS interference.
            let d2 = interval_rate_increasing(
                bw,
                ch.z22,
                noise + p.p_bmax * ch.z12,
                w.alpha2,
                w.beta2,
                cap,
            );
            (cap, c1, d2)
        }
        BoundaryCase::D2dPowerAtMax => {
            let cap = p.p_bmax;
            // C1's rate grows with the BS power against fixed D1 interference.
            let c1 = interval_rate_increasing(
                bw,
                ch.z11,
                noise + p.p_dmax * ch.z21,
                w.alpha1,
                w.beta1,
                cap,
            );
            // D2's rate falls as the BS power rises.
            let d2 = interval_rate_decreasing(
                bw,
                p.p_dmax * ch.z22,
                ch.z12,
                noise,
                w.alpha2,
                w.beta2,
                cap,
            );
            (cap, c1, d2)
        }
    };

    let build = |free: f64| -> PowerVector {
        match case {
            BoundaryCase::BsPowerAtMax => PowerVector {
                p_b1: p.p_bmax,
                p_b2: 0.0,
                p_d: free,
            },
            BoundaryCase::D2dPowerAtMax => PowerVector {
                p_b1: free,
                p_b2: 0.0,
                p_d: p.p_dmax,
            },
        }
    };

    let both_lo = lo1.max(lo2);
    let both_hi = hi1.min(hi2);

    let (priority, candidates): (Priority, Vec<f64>) = if both_lo <= both_hi {
        (Priority::BothServed, vec![both_lo, both_hi])
    } else if lo1 <= hi1 || lo2 <= hi2 {
        // Keep endpoints that are real powers and that serve at least one
        // receiver; endpoints of a nonempty interval always qualify.
        let mut cands: Vec<f64> = [lo1, hi1, lo2, hi2]
            .into_iter()
            .filter(|x| x.is_finite() && (0.0..=cap).contains(x))
            .filter(|&x| {
                let r = rates_reuse(p, ch, &build(x));
                in_window(r.r1, w.alpha1, w.beta1) || in_window(r.r2, w.alpha2, w.beta2)
            })
            .collect();
        if cands.is_empty() {
            // Defensive: cannot happen for a nonempty interval, but never
            // return an empty candidate list.
            cands = vec![0.0, cap];
        }
        (Priority::OneServed, cands)
    } else {
        (Priority::NoneServed, vec![0.0, cap])
    };

    let mut best: Option<(f64, PowerVector, RatePair)> = None;
    for x in candidates {
        let pw = build(x);
        let r = rates_reuse(p, ch, &pw);
        let total = r.total();
        let better = match &best {
            None => true,
            Some((bt, _, _)) => total >= *bt,
        };
        if better {
            best = Some((total, pw, r));
        }
    }
    let (_, powers, r) = best.expect("candidate list is never empty");

    PowerDecision {
        mode: Mode::Reuse,
        powers,
        rates: r,
        priority,
    }
}

/// Full reuse-mode solve: interior solution if the `beta` targets are jointly
/// attainable within the caps, otherwise the better of the two boundary
/// searches (lower priority first, then higher sum rate; exact ties go to the
/// `P_b1 = P_bmax` case).
pub fn solve_reuse(p: &RadioParams, ch: &ChannelState, w: &RateWindowPair) -> PowerDecision {
    if let Some(pw) = solve_reuse_interior(p, ch, w) {
        return decision(Mode::Reuse, p, ch, w, pw);
    }
    let c1 = solve_reuse_boundary(p, ch, w, BoundaryCase::BsPowerAtMax);
    let c2 = solve_reuse_boundary(p, ch, w, BoundaryCase::D2dPowerAtMax);
    if c2.priority < c1.priority
        || (c2.priority == c1.priority && c2.total_rate() > c1.total_rate())
    {
        c2
    } else {
        c1
    }
}

// --- mode selection ---------------------------------------------------------

/// Picks the slot's transmission mode: lowest priority number first, then
/// highest sum rate; exact ties keep the earliest of cellular, dedicated,
/// reuse.
pub fn select_mode(
    cellular: &PowerDecision,
    dedicated: &PowerDecision,
    reuse: &PowerDecision,
) -> PowerDecision {
    let mut best = cellular;
    for cand in [dedicated, reuse] {
        if cand.priority < best.priority
            || (cand.priority == best.priority && cand.total_rate() > best.total_rate())
        {
            best = cand;
        }
    }
    *best
}

/// Solves all three modes for one slot (the order matches [`Mode::ALL`]).
pub fn solve_all(p: &RadioParams, ch: &ChannelState, w: &RateWindowPair) -> [PowerDecision; 3] {
    [
        solve_cellular(p, ch, w),
        solve_dedicated(p, ch, w),
        solve_reuse(p, ch, w),
    ]
}

// --- tests ------------------------------------------------------------------
