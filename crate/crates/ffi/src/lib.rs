//! C ABI for the duoprice equilibrium solver.
//!
//! The surface is deliberately small: load a scenario into an opaque handle,
//! run analyses against it with JSON requests, read JSON reports back.
//!
//! Conventions:
//! - Every fallible call returns a [`DpStatus`]; on failure a thread-local
//!   message is retrievable via [`dp_last_error_message`].
//! - Strings returned by the library are heap-allocated, NUL-terminated, and
//!   must be released with [`dp_string_free`].
//! - Handles must be released with [`dp_scenario_free`]; they are safe to
//!   share across threads for reads but not to free twice.
//! - Panics never unwind across the boundary; they surface as
//!   [`DpStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use duoprice::cli::dispatch_json;
use duoprice::{ModelError, Scenario};

/// Outcome of a fallible library call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpStatus {
    /// The call succeeded.
    Ok = 0,
    /// The inputs were rejected (malformed JSON, invalid scenario, bad
    /// arguments).
    InvalidInput = 1,
    /// A construction's premise does not hold on this scenario.
    PremiseFailed = 2,
    /// An internal failure; file a bug.
    Internal = 3,
}

/// Opaque handle to a validated scenario (market, settings, digest).
pub struct DpScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

fn status_of(err: &ModelError) -> DpStatus {
    match err {
        ModelError::PremiseViolation(_) => DpStatus::PremiseFailed,
        e if e.is_validation() => DpStatus::InvalidInput,
        _ => DpStatus::Internal,
    }
}

fn to_owned_c_string(text: &str) -> *mut c_char {
    match CString::new(text.replace('\0', " ")) {
        Ok(s) => s.into_raw(),
        Err(_) => ptr::null_mut(),
    }
}

/// # Safety
/// `s` must be non-null and NUL-terminated.
unsafe fn read_utf8<'a>(s: *const c_char, what: &str) -> Result<&'a str, DpStatus> {
    if s.is_null() {
        set_error(format!("{what} pointer is null"));
        return Err(DpStatus::InvalidInput);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        DpStatus::InvalidInput
    })
}

fn guard<T>(what: &str, f: impl FnOnce() -> T) -> Option<T> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => Some(v),
        Err(_) => {
            set_error(format!("internal panic during {what}"));
            None
        }
    }
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn dp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Most recent error message on this thread, or null when the last call
/// succeeded. The caller owns the returned string (free with
/// `dp_string_free`).
#[no_mangle]
pub extern "C" fn dp_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(msg) => to_owned_c_string(&msg.to_string_lossy()),
        None => ptr::null_mut(),
    })
}

/// Parse and validate a scenario from JSON. Returns null on failure (consult
/// `dp_last_error_message`). The handle must be freed with
/// `dp_scenario_free`.
///
/// # Safety
/// `json` must be null or point to a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dp_scenario_from_json(json: *const c_char) -> *mut DpScenario {
    clear_error();
    let Ok(text) = read_utf8(json, "scenario JSON") else {
        return ptr::null_mut();
    };
    let built = guard("scenario parsing", || Scenario::from_json(text));
    match built {
        Some(Ok(inner)) => Box::into_raw(Box::new(DpScenario { inner })),
        Some(Err(e)) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
        None => ptr::null_mut(),
    }
}

/// The bundled reference scenario. The handle must be freed with
/// `dp_scenario_free`.
#[no_mangle]
pub extern "C" fn dp_scenario_reference() -> *mut DpScenario {
    clear_error();
    match guard("reference scenario construction", Scenario::reference_example) {
        Some(inner) => Box::into_raw(Box::new(DpScenario { inner })),
        None => ptr::null_mut(),
    }
}

/// Digest identifying the scenario's content. The caller owns the returned
/// string; null only on internal failure.
///
/// # Safety
/// `scenario` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn dp_scenario_digest(scenario: *const DpScenario) -> *mut c_char {
    clear_error();
    if scenario.is_null() {
        set_error("scenario handle is null".into());
        return ptr::null_mut();
    }
    to_owned_c_string(&(*scenario).inner.digest)
}

/// Release a scenario handle. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle returned by this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn dp_scenario_free(scenario: *mut DpScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run one analysis request against the scenario.
///
/// `request_json` is a JSON object tagged by `command`, e.g.
/// `{"command":"find-bne"}`, `{"command":"check-bne","pf":0.0,"pl":0.4676,
/// "cutoff":0.595,"low":1}`, or `{"command":"innovate","innovator":1,
/// "construction":"positive-profit","t_bar":0.9}`. On success `*out_json`
/// receives the JSON report (free with `dp_string_free`).
///
/// # Safety
/// `scenario` must be a live handle; `request_json` a NUL-terminated string;
/// `out_json` a valid location to store a pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_analyze(
    scenario: *const DpScenario,
    request_json: *const c_char,
    out_json: *mut *mut c_char,
) -> DpStatus {
    clear_error();
    if out_json.is_null() {
        set_error("output location is null".into());
        return DpStatus::InvalidInput;
    }
    *out_json = ptr::null_mut();
    if scenario.is_null() {
        set_error("scenario handle is null".into());
        return DpStatus::InvalidInput;
    }
    let request = match read_utf8(request_json, "analysis request JSON") {
        Ok(r) => r,
        Err(status) => return status,
    };
    let scenario = &(*scenario).inner;
    let Some(outcome) = guard("analysis", || dispatch_json(scenario, request)) else {
        return DpStatus::Internal;
    };
    match outcome {
        Ok(report) => {
            let raw = to_owned_c_string(&report);
            if raw.is_null() {
                set_error("report could not be encoded as a C string".into());
                return DpStatus::Internal;
            }
            *out_json = raw;
            DpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library that has not been
/// freed yet.
#[no_mangle]
pub unsafe extern "C" fn dp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
