//! Block-fading channel gains for the five links in play.
//!
//! Topology: a base station serves the cellular user C1 directly and can relay
//! to the device-to-device receiver D2; the D2D transmitter D1 reaches D2
//! directly, interferes with C1 when spectrum is reused, and uplinks to the
//! base station when D2 is served through the infrastructure. Each link's
//! power gain is Rayleigh block fading: constant within a slot, independent
//! across slots, exponentially distributed with a per-link mean.
//!
//! Sampling is counter-based rather than sequential: the gain of (seed, slot,
//! link) is a pure hash of those three values, so any slot can be evaluated in
//! isolation, replayed, or checked against another run without streaming the
//! generator through the whole history.

/// One directed radio link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    /// Base station -> cellular user (gain `z11`).
    BsToC1 = 0,
    /// Base station -> D2D receiver, downlink leg of relayed service (`z12`).
    BsToD2 = 1,
    /// D2D transmitter -> cellular user, interference path (`z21`).
    D1ToC1 = 2,
    /// D2D transmitter -> D2D receiver, the direct link (`z22`).
    D1ToD2 = 3,
    /// D2D transmitter -> base station, uplink leg of relayed service (`z23`).
    D1ToBs = 4,
}

impl Link {
    pub const ALL: [Link; 5] = [
        Link::BsToC1,
        Link::BsToD2,
        Link::D1ToC1,
        Link::D1ToD2,
        Link::D1ToBs,
    ];
}

/// Mean gains plus the seed all per-slot randomness derives from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingConfig {
    pub seed: u64,
    /// Mean power gain per link, indexed by [`Link`] discriminant.
    pub mean_gain: [f64; 5],
}

impl FadingConfig {
    pub fn new(seed: u64, mean_gain: [f64; 5]) -> Self {
        Self { seed, mean_gain }
    }

    /// Default geometry: the D2D pair sits close together (strongest link),
    /// the base station's direct link is nominal, and the cross paths -
    /// relay legs and interference - are weaker.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            mean_gain: [1.0, 0.5, 0.5, 2.0, 0.5],
        }
    }

    pub fn mean(&self, link: Link) -> f64 {
        self.mean_gain[link as usize]
    }
}

/// Instantaneous power gains for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    pub z11: f64,
    pub z12: f64,
    pub z21: f64,
    pub z22: f64,
    pub z23: f64,
}

impl ChannelState {
    pub fn gain(&self, link: Link) -> f64 {
        match link {
            Link::BsToC1 => self.z11,
            Link::BsToD2 => self.z12,
            Link::D1ToC1 => self.z21,
            Link::D1ToD2 => self.z22,
            Link::D1ToBs => self.z23,
        }
    }
}

// --- counter-based sampling -------------------------------------------------

/// SplitMix64 finalizer: advances by the golden-gamma increment and mixes.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapses (seed, slot, link) into one well-mixed 64-bit word.
fn counter_hash(seed: u64, slot: u64, link: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ slot);
    splitmix64(h ^ link)
}

/// Uniform draw in [0, 1) from the top 53 bits of the hash.
fn unit_uniform(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Gain of a single link in a single slot: `Exp(mean)` via inversion,
/// `z = -mean * ln(1 - u)`.
pub fn sample_gain(config: &FadingConfig, slot: u64, link: Link) -> f64 {
    let u = unit_uniform(counter_hash(config.seed, slot, link as u64));
    -config.mean(link) * (-u).ln_1p()
}

/// All five link gains for one slot.
pub fn sample_slot(config: &FadingConfig, slot: u64) -> ChannelState {
    ChannelState {
        z11: sample_gain(config, slot, Link::BsToC1),
        z12: sample_gain(config, slot, Link::BsToD2),
        z21: sample_gain(config, slot, Link::D1ToC1),
        z22: sample_gain(config, slot, Link::D1ToD2),
        z23: sample_gain(config, slot, Link::D1ToBs),
    }
}

// --- tests ------------------------------------------------------------------
