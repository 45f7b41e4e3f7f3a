//! C interface to the apo-dcsp simulator.
//!
//! Every function returns an [`ApoStatus`]; on failure a description is
//! available from [`apo_last_error`] on the same thread. Handles are opaque
//! and must be released with the matching `_free` function. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`apo_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use apo_dcsp::csp::{brute_force, CspInstance};
use apo_dcsp::generators::{gen_sensor_field, GeneratorConfig, SensorParams};
use apo_dcsp::sim::{run_trial, Protocol, SimOptions, TrialResult, TrialVerdict};
use apo_dcsp::{CspError, GenError, SimError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Generate = 4,
    Simulation = 5,
    CapExceeded = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApoProtocol {
    Apo = 0,
    Awc = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApoVerdict {
    Running = 0,
    Solved = 1,
    Unsatisfiable = 2,
    CycleLimit = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApoFamily {
    /// Satisfiable by construction.
    Minton = 0,
    Random = 1,
}

/// A constraint satisfaction instance.
pub struct ApoInstance(CspInstance);

/// The outcome of one simulated trial.
pub struct ApoTrialResult(TrialResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: ApoStatus, msg: impl Into<String>) -> ApoStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> ApoStatus) -> ApoStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(ApoStatus::Panic, "internal panic"))
}

fn csp_status(e: &CspError) -> ApoStatus {
    match e {
        CspError::Parse { .. } => ApoStatus::Parse,
        CspError::CapExceeded { .. } => ApoStatus::CapExceeded,
        _ => ApoStatus::InvalidArgument,
    }
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> ApoStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            ApoStatus::Ok
        }
        Err(_) => fail(ApoStatus::InvalidArgument, "string contains a NUL byte"),
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn apo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn apo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a pointer obtained from this library.
#[no_mangle]
pub unsafe extern "C" fn apo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an instance from its text form.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apo_instance_parse(
    text: *const c_char,
    out: *mut *mut ApoInstance,
) -> ApoStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(ApoStatus::NullPointer, "null argument");
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(ApoStatus::Parse, "instance text is not UTF-8");
        };
        match CspInstance::from_text(text) {
            Ok(inst) => {
                write_out(out, ApoInstance(inst));
                ApoStatus::Ok
            }
            Err(e) => fail(csp_status(&e), e.to_string()),
        }
    })
}

fn generated(r: Result<CspInstance, GenError>, out: *mut *mut ApoInstance) -> ApoStatus {
    match r {
        Ok(inst) => {
            unsafe { write_out(out, ApoInstance(inst)) };
            ApoStatus::Ok
        }
        Err(e) => fail(ApoStatus::Generate, e.to_string()),
    }
}

/// Generates a coloring instance with `round(density * n)` edges.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apo_instance_generate_coloring(
    family: ApoFamily,
    n: usize,
    density: f64,
    k: u32,
    seed: u64,
    out: *mut *mut ApoInstance,
) -> ApoStatus {
    guard(|| {
        if out.is_null() {
            return fail(ApoStatus::NullPointer, "null argument");
        }
        let mut config = match family {
            ApoFamily::Minton => GeneratorConfig::minton(n, density, k),
            ApoFamily::Random => GeneratorConfig::random(n, density),
        };
        config.k = k;
        generated(config.generate(seed), out)
    })
}

/// Generates a sensor field on the default 14 x 16 grid over 200 x 200 ft.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apo_instance_generate_sensor(
    targets: usize,
    range: f64,
    seed: u64,
    out: *mut *mut ApoInstance,
) -> ApoStatus {
    guard(|| {
        if out.is_null() {
            return fail(ApoStatus::NullPointer, "null argument");
        }
        let params = SensorParams {
            targets,
            range,
            ..SensorParams::default()
        };
        generated(gen_sensor_field(&params, seed), out)
    })
}

/// # Safety
/// `inst` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn apo_instance_free(inst: *mut ApoInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Variable count, or 0 for NULL.
///
/// # Safety
/// `inst` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apo_instance_num_variables(inst: *const ApoInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.num_variables())
}

/// Constraint count, or 0 for NULL.
///
/// # Safety
/// `inst` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apo_instance_num_constraints(inst: *const ApoInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.num_constraints())
}

/// Serializes the instance; free the result with [`apo_string_free`].
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apo_instance_to_text(
    inst: *const ApoInstance,
    out: *mut *mut c_char,
) -> ApoStatus {
    guard(|| match (inst.as_ref(), out.is_null()) {
        (Some(i), false) => write_string(out, i.0.to_text()),
        _ => fail(ApoStatus::NullPointer, "null argument"),
    })
}

/// Decides satisfiability by exhaustive search over at most `cap`
/// assignments.
///
/// # Safety
/// `inst` must be a live handle and `satisfiable` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apo_instance_brute_force(
    inst: *const ApoInstance,
    cap: u64,
    satisfiable: *mut bool,
) -> ApoStatus {
    guard(|| {
        let (Some(i), false) = (inst.as_ref(), satisfiable.is_null()) else {
            return fail(ApoStatus::NullPointer, "null argument");
        };
        match brute_force(&i.0, u128::from(cap)) {
            Ok(v) => {
                *satisfiable = v.is_satisfiable();
                ApoStatus::Ok
            }
            Err(e) => fail(csp_status(&e), e.to_string()),
        }
    })
}

/// Runs one trial from initial values drawn with `value_seed`.
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apo_run_trial(
    inst: *const ApoInstance,
    protocol: ApoProtocol,
    value_seed: u64,
    cycle_limit: u64,
    trace: bool,
    out: *mut *mut ApoTrialResult,
) -> ApoStatus {
    guard(|| {
        let (Some(i), false) = (inst.as_ref(), out.is_null()) else {
            return fail(ApoStatus::NullPointer, "null argument");
        };
        if cycle_limit == 0 {
            return fail(ApoStatus::InvalidArgument, "cycle_limit must be positive");
        }
        let protocol = match protocol {
            ApoProtocol::Apo => Protocol::Apo,
            ApoProtocol::Awc => Protocol::Awc,
        };
        let options = SimOptions {
            cycle_limit,
            trace,
            ..SimOptions::default()
        };
        match run_trial(&i.0, protocol, None, &options, value_seed) {
            Ok(r) => {
                write_out(out, ApoTrialResult(r));
                ApoStatus::Ok
            }
            Err(e @ SimError::ProtocolMismatch { .. }) => {
                fail(ApoStatus::InvalidArgument, e.to_string())
            }
            Err(e) => fail(ApoStatus::Simulation, e.to_string()),
        }
    })
}

/// # Safety
/// `r` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_free(r: *mut ApoTrialResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_verdict(r: *const ApoTrialResult) -> ApoVerdict {
    match r.as_ref().map(|r| r.0.verdict) {
        Some(TrialVerdict::Solved) => ApoVerdict::Solved,
        Some(TrialVerdict::Unsatisfiable) => ApoVerdict::Unsatisfiable,
        Some(TrialVerdict::CycleLimit) => ApoVerdict::CycleLimit,
        Some(TrialVerdict::Running) | None => ApoVerdict::Running,
    }
}

unsafe fn counter(r: *const ApoTrialResult, f: fn(&TrialResult) -> u64) -> u64 {
    r.as_ref().map_or(0, |r| f(&r.0))
}

/// Simulated cycles. Returns 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_cycles(r: *const ApoTrialResult) -> u64 {
    counter(r, |t| t.cycles)
}

/// Messages sent. Returns 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_messages(r: *const ApoTrialResult) -> u64 {
    counter(r, |t| t.messages)
}

/// Modeled message bytes. Returns 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_bytes(r: *const ApoTrialResult) -> u64 {
    counter(r, |t| t.bytes)
}

/// Abstract work: constraint checks plus search nodes. Returns 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_work(r: *const ApoTrialResult) -> u64 {
    counter(r, |t| t.work)
}

/// Mediation sessions opened. Returns 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_sessions(r: *const ApoTrialResult) -> u64 {
    counter(r, |t| t.sessions)
}

/// Invariant violations detected. Returns 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_violations(r: *const ApoTrialResult) -> u64 {
    counter(r, |t| t.violations.len() as u64)
}

/// Final assignment as `variable value` lines, in variable order.
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_assignment_text(
    r: *const ApoTrialResult,
    out: *mut *mut c_char,
) -> ApoStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(ApoStatus::NullPointer, "null argument");
        };
        let Some(a) = &r.0.final_assignment else {
            return fail(ApoStatus::InvalidArgument, "trial has no final assignment");
        };
        let text: String = a.iter().map(|(x, v)| format!("{} {v}\n", x.0)).collect();
        write_string(out, text)
    })
}

/// Message trace as `cycle sender receiver kind size` lines. Fails unless
/// the trial ran with tracing.
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apo_trial_trace_text(
    r: *const ApoTrialResult,
    out: *mut *mut c_char,
) -> ApoStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(ApoStatus::NullPointer, "null argument");
        };
        let Some(trace) = &r.0.trace else {
            return fail(ApoStatus::InvalidArgument, "trial ran without tracing");
        };
        let text: String = trace.iter().map(|l| format!("{l}\n")).collect();
        write_string(out, text)
    })
}
