//! C ABI over `ftqc-core`.
//!
//! Objects cross the boundary as opaque pointers that the caller releases with
//! the matching `*_free` function. Strings returned by the library are
//! NUL-terminated UTF-8 owned by the caller and released with
//! [`ftqc_string_free`]. Every fallible call returns an [`FtqcStatus`]; the
//! message for the most recent failure on the calling thread is available from
//! [`ftqc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ftqc_core::formula::{Formula, VariableEnvironment};
use ftqc_core::job::{JobSpec, ProfileRegistry, ResolveError};
use ftqc_core::pipeline::{estimate, EstimateReport, EstimateRequest, PipelineError};

/// Status codes. The first four match the `ftqc` command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtqcStatus {
    Ok = 0,
    Internal = 1,
    Config = 2,
    Infeasible = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    Estimate = 6,
    Formula = 7,
}

/// A validated job ready to estimate.
pub struct FtqcJob {
    request: EstimateRequest,
}

/// A finished estimate.
pub struct FtqcReport {
    report: EstimateReport,
}

/// A parsed formula.
pub struct FtqcFormula {
    formula: Formula,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: FtqcStatus, message: impl Into<String>) -> FtqcStatus {
    set_error(message);
    status
}

fn guard(body: impl FnOnce() -> FtqcStatus) -> FtqcStatus {
    catch_unwind(AssertUnwindSafe(body))
        .unwrap_or_else(|_| fail(FtqcStatus::Internal, "panic inside ftqc"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, FtqcStatus> {
    if s.is_null() {
        return Err(fail(FtqcStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(FtqcStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn into_c_string(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

fn pipeline_status(err: &PipelineError) -> FtqcStatus {
    if err.is_infeasible() {
        FtqcStatus::Infeasible
    } else {
        FtqcStatus::Estimate
    }
}

fn resolve_status(err: &ResolveError) -> FtqcStatus {
    match err {
        ResolveError::Config(_) => FtqcStatus::Config,
        ResolveError::Counts(_) => FtqcStatus::Estimate,
    }
}

/// Parses a JSON job. `base_dir` resolves a relative `tracePath` and may be
/// null for the current directory.
///
/// # Safety
/// `json` and `base_dir` must be null or NUL-terminated; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn ftqc_job_from_json(
    json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut FtqcJob,
) -> FtqcStatus {
    guard(|| {
        if out.is_null() {
            return fail(FtqcStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let dir = if base_dir.is_null() {
            "."
        } else {
            match read_str(base_dir) {
                Ok(d) => d,
                Err(s) => return s,
            }
        };
        let value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return fail(FtqcStatus::Config, format!("invalid job JSON: {e}")),
        };
        let registry = match ProfileRegistry::load() {
            Ok(r) => r,
            Err(e) => return fail(FtqcStatus::Config, e.to_string()),
        };
        let request = JobSpec::from_value(value)
            .map_err(ResolveError::from)
            .and_then(|spec| spec.resolve(Path::new(dir), &registry));
        match request {
            Ok(request) => {
                *out = Box::into_raw(Box::new(FtqcJob { request }));
                FtqcStatus::Ok
            }
            Err(e) => fail(resolve_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `job` must be null or come from [`ftqc_job_from_json`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn ftqc_job_free(job: *mut FtqcJob) {
    if !job.is_null() {
        drop(Box::from_raw(job));
    }
}

/// Runs the estimate for `job`.
///
/// # Safety
/// `job` must be a live job; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ftqc_estimate(job: *const FtqcJob, out: *mut *mut FtqcReport) -> FtqcStatus {
    guard(|| {
        if job.is_null() || out.is_null() {
            return fail(FtqcStatus::NullPointer, "null job or output pointer");
        }
        *out = ptr::null_mut();
        match estimate(&(*job).request) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(FtqcReport { report }));
                FtqcStatus::Ok
            }
            Err(e) => fail(pipeline_status(&e), format!("{}: {e}", e.stage())),
        }
    })
}

/// # Safety
/// `report` must be null or come from [`ftqc_estimate`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn ftqc_report_free(report: *mut FtqcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Serializes the full report as JSON.
///
/// # Safety
/// `report` must be a live report; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ftqc_report_to_json(
    report: *const FtqcReport,
    out: *mut *mut c_char,
) -> FtqcStatus {
    guard(|| {
        if report.is_null() || out.is_null() {
            return fail(FtqcStatus::NullPointer, "null report or output pointer");
        }
        match serde_json::to_string(&(*report).report) {
            Ok(text) => {
                *out = into_c_string(text);
                FtqcStatus::Ok
            }
            Err(e) => fail(FtqcStatus::Internal, e.to_string()),
        }
    })
}

/// Total physical qubits, or 0 for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn ftqc_report_physical_qubits(report: *const FtqcReport) -> u64 {
    report.as_ref().map_or(0, |r| r.report.physical_qubits())
}

/// Runtime in nanoseconds, or NaN for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn ftqc_report_runtime_ns(report: *const FtqcReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.runtime())
}

/// Reliable quantum operations per second, or NaN for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn ftqc_report_rqops(report: *const FtqcReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.rqops())
}

/// Code distance, or 0 for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn ftqc_report_code_distance(report: *const FtqcReport) -> u32 {
    report.as_ref().map_or(0, |r| r.report.code_distance())
}

/// Number of T-factory copies, or 0 for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn ftqc_report_t_factory_copies(report: *const FtqcReport) -> u64 {
    report
        .as_ref()
        .map_or(0, |r| r.report.resource_estimates_breakdown.num_t_factory_copies)
}

/// # Safety
/// `source` must be null or NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ftqc_formula_parse(
    source: *const c_char,
    out: *mut *mut FtqcFormula,
) -> FtqcStatus {
    guard(|| {
        if out.is_null() {
            return fail(FtqcStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(source) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Formula::parse(text) {
            Ok(formula) => {
                *out = Box::into_raw(Box::new(FtqcFormula { formula }));
                FtqcStatus::Ok
            }
            Err(e) => fail(FtqcStatus::Formula, e.to_string()),
        }
    })
}

/// Evaluates `formula` with `count` variables bound by name.
///
/// # Safety
/// `names` and `values` must each point to `count` elements (or be null when
/// `count` is 0); every name must be NUL-terminated; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn ftqc_formula_eval(
    formula: *const FtqcFormula,
    names: *const *const c_char,
    values: *const f64,
    count: usize,
    out: *mut f64,
) -> FtqcStatus {
    guard(|| {
        if formula.is_null() || out.is_null() || (count > 0 && (names.is_null() || values.is_null())) {
            return fail(FtqcStatus::NullPointer, "null formula, binding or output pointer");
        }
        let mut env = VariableEnvironment::new();
        for i in 0..count {
            let name = match read_str(*names.add(i)) {
                Ok(n) => n,
                Err(s) => return s,
            };
            if let Err(e) = env.bind(name, *values.add(i)) {
                return fail(FtqcStatus::Formula, e.to_string());
            }
        }
        match (*formula).formula.evaluate(&env) {
            Ok(v) => {
                *out = v;
                FtqcStatus::Ok
            }
            Err(e) => fail(FtqcStatus::Formula, e.to_string()),
        }
    })
}

/// # Safety
/// `formula` must be null or come from [`ftqc_formula_parse`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn ftqc_formula_free(formula: *mut FtqcFormula) {
    if !formula.is_null() {
        drop(Box::from_raw(formula));
    }
}

/// Lists the hardware profiles as a JSON array.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ftqc_profiles_json(out: *mut *mut c_char) -> FtqcStatus {
    guard(|| {
        if out.is_null() {
            return fail(FtqcStatus::NullPointer, "null output pointer");
        }
        let registry = match ProfileRegistry::load() {
            Ok(r) => r,
            Err(e) => return fail(FtqcStatus::Config, e.to_string()),
        };
        match serde_json::to_string(&registry.iter().collect::<Vec<_>>()) {
            Ok(text) => {
                *out = into_c_string(text);
                FtqcStatus::Ok
            }
            Err(e) => fail(FtqcStatus::Internal, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ftqc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ftqc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ftqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
