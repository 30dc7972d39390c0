//! C ABI for the simulator: load a scenario from a config file, run it, and
//! read back the summary and per-slot records through flat structs.
//!
//! Conventions:
//! * Every function returns a [`DvStatus`]; `DV_STATUS_OK` is 0.
//! * Objects cross the boundary as opaque pointers created by `dv_*_new`/
//!   `dv_*_load` and released by the matching `dv_*_free`. Passing null where
//!   an object is expected yields `DV_STATUS_NULL_ARGUMENT`, never a crash.
//! * On any failure the thread-local error message is set; fetch it with
//!   [`dv_last_error`]. Panics are caught at the boundary and reported as
//!   `DV_STATUS_INTERNAL`.
//! * The generated header lands in `include/d2dvid.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use d2dvid::config::load_config;
use d2dvid::rate::Mode;
use d2dvid::sim::{run, Scenario, SimulationResult};

// --- status codes and error reporting ---------------------------------------

/// Result of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Config file missing, malformed, or semantically invalid.
    Config = 3,
    /// The simulation rejected the scenario.
    Sim = 4,
    /// An index or enum value was out of range.
    OutOfRange = 5,
    /// Internal panic; details in the last-error message.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: DvStatus, msg: impl Into<String>) -> DvStatus {
    set_error(msg);
    status
}

/// Copies the current thread's last error message (NUL-terminated) into
/// `buf`. Returns the full message length in bytes (excluding the NUL), which
/// may exceed `cap`; the copy is truncated to fit. A zero return means no
/// error has been recorded. `buf` may be null to query the length alone.
///
/// # Safety
/// `buf` must be null or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dv_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Runs `f`, converting panics into `DV_STATUS_INTERNAL`.
fn guarded(f: impl FnOnce() -> DvStatus) -> DvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            fail(DvStatus::Internal, format!("internal panic: {msg}"))
        }
    }
}

// --- opaque handles ---------------------------------------------------------

/// A loaded, validated scenario. Opaque; release with [`dv_scenario_free`].
pub struct DvScenario {
    inner: Scenario,
}

/// A finished simulation. Opaque; release with [`dv_result_free`].
pub struct DvResult {
    inner: SimulationResult,
}

// --- flat record types ------------------------------------------------------

/// Spectrum-sharing mode codes used in [`DvSlot::mode`] and
/// [`dv_scenario_set_forced_mode`].
pub const DV_MODE_CELLULAR: c_int = 0;
/// See [`DV_MODE_CELLULAR`].
pub const DV_MODE_DEDICATED: c_int = 1;
/// See [`DV_MODE_CELLULAR`].
pub const DV_MODE_REUSE: c_int = 2;
/// "No forced mode": the engine selects per slot.
pub const DV_MODE_SELECT: c_int = -1;

/// Per-receiver tallies for a whole run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DvReceiverSummary {
    /// Playback slots of this receiver's video.
    pub slots: u32,
    pub underflow_events: u32,
    pub clip_events: u32,
    pub underflow_probability: f64,
    pub clipped_bits: f64,
    /// Mean buffer utilization in `[0, 1]`.
    pub mean_buffer_utilization: f64,
}

/// Whole-run tallies.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DvSummary {
    /// Total simulated slots (the longer of the two videos).
    pub slots: u32,
    /// Slots spent in each mode.
    pub mode_cellular: u32,
    pub mode_dedicated: u32,
    pub mode_reuse: u32,
    pub c1: DvReceiverSummary,
    pub d2: DvReceiverSummary,
    /// Mean per-slot sum rate in bits/s.
    pub mean_total_rate: f64,
}

/// One slot of the run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DvSlot {
    /// Slot index, starting at 1.
    pub t: u32,
    /// `DV_MODE_*` code of the chosen mode.
    pub mode: c_int,
    /// 1 = both receivers inside their windows, 2 = one, 3 = neither.
    pub priority: u8,
    pub underflow_c1: u8,
    pub underflow_d2: u8,
    pub clip_c1: u8,
    pub clip_d2: u8,
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
}

// --- scenario lifecycle -----------------------------------------------------

/// Loads and validates a scenario from a TOML config file. On success writes
/// a new handle to `out`.
///
/// # Safety
/// `config_path` must point to a NUL-terminated string; `out` must be a valid
/// pointer to pointer-sized storage.
#[no_mangle]
pub unsafe extern "C" fn dv_scenario_load(
    config_path: *const c_char,
    out: *mut *mut DvScenario,
) -> DvStatus {
    guarded(|| {
        if config_path.is_null() || out.is_null() {
            return fail(DvStatus::NullArgument, "config_path and out must be non-null");
        }
        let path = match unsafe { CStr::from_ptr(config_path) }.to_str() {
            Ok(s) => s,
            Err(_) => return fail(DvStatus::InvalidUtf8, "config_path is not valid UTF-8"),
        };
        let cfg = match load_config(Path::new(path)) {
            Ok(c) => c,
            Err(e) => return fail(DvStatus::Config, e.to_string()),
        };
        let scenario = match cfg.build_scenario() {
            Ok(s) => s,
            Err(e) => return fail(DvStatus::Config, e.to_string()),
        };
        unsafe {
            *out = Box::into_raw(Box::new(DvScenario { inner: scenario }));
        }
        DvStatus::Ok
    })
}

/// Overrides the fading seed.
///
/// # Safety
/// `scenario` must be a live handle from [`dv_scenario_load`].
#[no_mangle]
pub unsafe extern "C" fn dv_scenario_set_seed(scenario: *mut DvScenario, seed: u64) -> DvStatus {
    guarded(|| {
        let Some(s) = (unsafe { scenario.as_mut() }) else {
            return fail(DvStatus::NullArgument, "scenario must be non-null");
        };
        s.inner.fading.seed = seed;
        DvStatus::Ok
    })
}

/// Pins every slot to one mode (`DV_MODE_CELLULAR`/`DEDICATED`/`REUSE`) or
/// restores per-slot selection (`DV_MODE_SELECT`).
///
/// # Safety
/// `scenario` must be a live handle from [`dv_scenario_load`].
#[no_mangle]
pub unsafe extern "C" fn dv_scenario_set_forced_mode(
    scenario: *mut DvScenario,
    mode: c_int,
) -> DvStatus {
    guarded(|| {
        let Some(s) = (unsafe { scenario.as_mut() }) else {
            return fail(DvStatus::NullArgument, "scenario must be non-null");
        };
        s.inner.forced_mode = match mode {
            DV_MODE_SELECT => None,
            DV_MODE_CELLULAR => Some(Mode::Cellular),
            DV_MODE_DEDICATED => Some(Mode::Dedicated),
            DV_MODE_REUSE => Some(Mode::Reuse),
            other => {
                return fail(
                    DvStatus::OutOfRange,
                    format!("unknown mode code {other} (expected -1, 0, 1, or 2)"),
                )
            }
        };
        DvStatus::Ok
    })
}

/// Releases a scenario handle. Null is a no-op.
///
/// # Safety
/// `scenario` must be null or a live handle; it is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn dv_scenario_free(scenario: *mut DvScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

// --- running and reading results --------------------------------------------

/// Runs the scenario to completion. On success writes a new result handle to
/// `out`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must point to pointer-sized
/// storage.
#[no_mangle]
pub unsafe extern "C" fn dv_run(scenario: *const DvScenario, out: *mut *mut DvResult) -> DvStatus {
    guarded(|| {
        let Some(s) = (unsafe { scenario.as_ref() }) else {
            return fail(DvStatus::NullArgument, "scenario must be non-null");
        };
        if out.is_null() {
            return fail(DvStatus::NullArgument, "out must be non-null");
        }
        let result = match run(&s.inner) {
            Ok(r) => r,
            Err(e) => return fail(DvStatus::Sim, e.to_string()),
        };
        unsafe {
            *out = Box::into_raw(Box::new(DvResult { inner: result }));
        }
        DvStatus::Ok
    })
}

/// Copies the run's summary into `out`.
///
/// # Safety
/// `result` must be a live handle; `out` must point to a [`DvSummary`].
#[no_mangle]
pub unsafe extern "C" fn dv_result_summary(
    result: *const DvResult,
    out: *mut DvSummary,
) -> DvStatus {
    guarded(|| {
        let Some(r) = (unsafe { result.as_ref() }) else {
            return fail(DvStatus::NullArgument, "result must be non-null");
        };
        if out.is_null() {
            return fail(DvStatus::NullArgument, "out must be non-null");
        }
        let s = &r.inner.summary;
        let receiver = |x: &d2dvid::sim::ReceiverSummary| DvReceiverSummary {
            slots: x.slots,
            underflow_events: x.underflow_events,
            clip_events: x.clip_events,
            underflow_probability: x.underflow_probability,
            clipped_bits: x.clipped_bits,
            mean_buffer_utilization: x.mean_buffer_utilization,
        };
        unsafe {
            *out = DvSummary {
                slots: s.slots,
                mode_cellular: s.mode_histogram.cellular,
                mode_dedicated: s.mode_histogram.dedicated,
                mode_reuse: s.mode_histogram.reuse,
                c1: receiver(&s.c1),
                d2: receiver(&s.d2),
                mean_total_rate: s.mean_total_rate,
            };
        }
        DvStatus::Ok
    })
}

/// Number of simulated slots in the result.
///
/// # Safety
/// `result` must be null or a live handle (null yields 0).
#[no_mangle]
pub unsafe extern "C" fn dv_result_slot_count(result: *const DvResult) -> u32 {
    unsafe { result.as_ref() }.map_or(0, |r| r.inner.records.len() as u32)
}

/// Copies slot `index` (0-based, `< dv_result_slot_count`) into `out`.
///
/// # Safety
/// `result` must be a live handle; `out` must point to a [`DvSlot`].
#[no_mangle]
pub unsafe extern "C" fn dv_result_slot(
    result: *const DvResult,
    index: u32,
    out: *mut DvSlot,
) -> DvStatus {
    guarded(|| {
        let Some(r) = (unsafe { result.as_ref() }) else {
            return fail(DvStatus::NullArgument, "result must be non-null");
        };
        if out.is_null() {
            return fail(DvStatus::NullArgument, "out must be non-null");
        }
        let Some(rec) = r.inner.records.get(index as usize) else {
            return fail(
                DvStatus::OutOfRange,
                format!(
                    "slot index {index} out of range ({} slots)",
                    r.inner.records.len()
                ),
            );
        };
        unsafe {
            *out = DvSlot {
                t: rec.t,
                mode: rec.mode as c_int,
                priority: rec.priority,
                underflow_c1: rec.underflow_c1 as u8,
                underflow_d2: rec.underflow_d2 as u8,
                clip_c1: rec.clip_c1 as u8,
                clip_d2: rec.clip_d2 as u8,
                p_b1: rec.p_b1,
                p_b2: rec.p_b2,
                p_d: rec.p_d,
                r1: rec.r1,
                r2: rec.r2,
                alpha1: rec.alpha1,
                beta1: rec.beta1,
                alpha2: rec.alpha2,
                beta2: rec.beta2,
                a1: rec.a1,
                a2: rec.a2,
            };
        }
        DvStatus::Ok
    })
}

/// Releases a result handle. Null is a no-op.
///
/// # Safety
/// `result` must be null or a live handle; it is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn dv_result_free(result: *mut DvResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}
