//! Discrete-time simulator and optimization library for streaming stored VBR
//! video to one cellular user and one device-to-device pair, choosing per-slot
//! transmit powers and a spectrum-sharing mode under playout-buffer and
//! peak-power constraints.

pub mod channel;
pub mod cli;
pub mod config;
pub mod optimizer;
pub mod output;
pub mod rate;
pub mod sim;
pub mod trace;
