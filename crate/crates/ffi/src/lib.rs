//! C ABI over the `adctr` solver.
//!
//! Configurations and run reports are opaque heap handles owned by the
//! caller (`adctr_*_new` / `adctr_*_free`). Every fallible call returns an
//! [`AdctrCode`]; on failure a message is available from
//! [`adctr_last_error`] on the same thread until the next failing call.
//!
//! The header `include/adctr.h` is generated from this file by the build
//! script.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use adctr::driver::{minimize, verify_pred_bounds, RunReport, RunStatus, SolverConfig, Strategy};
use adctr::problems::get_problem;
use adctr::Error;

/// Return code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdctrCode {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonFiniteStart = 3,
    UnknownProblem = 4,
    BadDimension = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Outcome of a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdctrStatus {
    Converged = 0,
    MaxIter = 1,
    Stalled = 2,
    SubproblemFailure = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdctrStrategy {
    /// Alternating-direction subproblem solve.
    Adm = 0,
    /// Conic dogleg.
    Dctr = 1,
}

/// Objective callback: returns `f(x)` for `x` of length `n`.
pub type AdctrObjective = Option<unsafe extern "C" fn(x: *const f64, n: usize, user: *mut c_void) -> f64>;

/// Gradient callback: writes `n` entries to `g`. A nonzero return marks the
/// point as unusable (treated like a non-finite gradient).
pub type AdctrGradient =
    Option<unsafe extern "C" fn(x: *const f64, n: usize, g: *mut f64, user: *mut c_void) -> i32>;

/// Opaque solver settings.
pub struct AdctrConfig {
    inner: SolverConfig,
}

/// Opaque result of one run.
pub struct AdctrReport {
    inner: RunReport,
    violations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(code: AdctrCode, msg: impl Into<String>) -> AdctrCode {
    set_error(msg);
    code
}

fn code_for(err: &Error) -> AdctrCode {
    match err {
        Error::NonFiniteStart => AdctrCode::NonFiniteStart,
        Error::UnknownProblem(_) => AdctrCode::UnknownProblem,
        Error::BadDimension { .. } => AdctrCode::BadDimension,
        _ => AdctrCode::InvalidArgument,
    }
}

fn guarded(body: impl FnOnce() -> AdctrCode) -> AdctrCode {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => fail(AdctrCode::Panic, "internal panic"),
    }
}

/// Message of the last failing call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn adctr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn adctr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration with the default settings. Free with
/// [`adctr_config_free`].
#[no_mangle]
pub extern "C" fn adctr_config_new() -> *mut AdctrConfig {
    Box::into_raw(Box::new(AdctrConfig { inner: SolverConfig::default() }))
}

/// # Safety
/// `cfg` must come from [`adctr_config_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn adctr_config_free(cfg: *mut AdctrConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn with_config(cfg: *mut AdctrConfig, set: impl FnOnce(&mut SolverConfig)) -> AdctrCode {
    let Some(cfg) = cfg.as_mut() else {
        return fail(AdctrCode::NullPointer, "config is NULL");
    };
    let mut next = cfg.inner.clone();
    set(&mut next);
    match next.validate() {
        Ok(()) => {
            cfg.inner = next;
            AdctrCode::Ok
        }
        Err(e) => fail(AdctrCode::InvalidArgument, e.to_string()),
    }
}

/// `strategy` is one of the `AdctrStrategy` values.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn adctr_config_set_strategy(cfg: *mut AdctrConfig, strategy: i32) -> AdctrCode {
    let strategy = match strategy {
        s if s == AdctrStrategy::Adm as i32 => Strategy::Adm,
        s if s == AdctrStrategy::Dctr as i32 => Strategy::Dctr,
        other => return fail(AdctrCode::InvalidArgument, format!("unknown strategy {other}")),
    };
    with_config(cfg, |c| c.strategy = strategy)
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn adctr_config_set_grad_tol(cfg: *mut AdctrConfig, tol: f64) -> AdctrCode {
    with_config(cfg, |c| c.grad_tol = tol)
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn adctr_config_set_max_iter(cfg: *mut AdctrConfig, max_iter: usize) -> AdctrCode {
    with_config(cfg, |c| c.max_iter = max_iter)
}

/// Sets the initial radius; the radius cap grows to match if needed.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn adctr_config_set_delta0(cfg: *mut AdctrConfig, delta0: f64) -> AdctrCode {
    with_config(cfg, |c| {
        c.delta0 = delta0;
        c.delta_max = c.delta_max.max(delta0);
    })
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn adctr_config_set_check_bounds(cfg: *mut AdctrConfig, on: bool) -> AdctrCode {
    with_config(cfg, |c| c.check_bounds = on)
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn adctr_config_set_scale_initial_hessian(cfg: *mut AdctrConfig, on: bool) -> AdctrCode {
    with_config(cfg, |c| c.scale_initial_hessian = on)
}

fn finish_run(cfg: &SolverConfig, result: adctr::Result<RunReport>, out: *mut *mut AdctrReport) -> AdctrCode {
    match result {
        Ok(report) => {
            let violations = if cfg.check_bounds { verify_pred_bounds(&report.trace, 1e-8).len() } else { 0 };
            let handle = Box::new(AdctrReport { inner: report, violations });
            // SAFETY: checked non-null by the callers
            unsafe { *out = Box::into_raw(handle) };
            AdctrCode::Ok
        }
        Err(e) => fail(code_for(&e), e.to_string()),
    }
}

/// Minimize a user function. `cfg` may be NULL for the defaults. On success
/// `*out` receives a report to release with [`adctr_report_free`].
///
/// # Safety
/// `x0` must point to `n` doubles; the callbacks must be safe to call with
/// `user` and must not unwind.
#[no_mangle]
pub unsafe extern "C" fn adctr_minimize(
    cfg: *const AdctrConfig,
    n: usize,
    x0: *const f64,
    objective: AdctrObjective,
    gradient: AdctrGradient,
    user: *mut c_void,
    out: *mut *mut AdctrReport,
) -> AdctrCode {
    guarded(|| {
        if x0.is_null() || out.is_null() {
            return fail(AdctrCode::NullPointer, "x0 or out is NULL");
        }
        let (Some(objective), Some(gradient)) = (objective, gradient) else {
            return fail(AdctrCode::NullPointer, "callback is NULL");
        };
        if n == 0 {
            return fail(AdctrCode::InvalidArgument, "n must be positive");
        }
        let config = cfg.as_ref().map_or_else(SolverConfig::default, |c| c.inner.clone());
        let start = std::slice::from_raw_parts(x0, n).to_vec();
        let f = |x: &[f64]| objective(x.as_ptr(), x.len(), user);
        let g = |x: &[f64]| {
            let mut buf = vec![0.0; x.len()];
            if gradient(x.as_ptr(), x.len(), buf.as_mut_ptr(), user) != 0 {
                buf.fill(f64::NAN);
            }
            buf
        };
        finish_run(&config, minimize(f, g, &start, &config), out)
    })
}

/// Minimize a catalogue problem by name (or number) at dimension `n`,
/// starting from its standard point.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adctr_minimize_problem(
    cfg: *const AdctrConfig,
    name: *const c_char,
    n: usize,
    out: *mut *mut AdctrReport,
) -> AdctrCode {
    guarded(|| {
        if name.is_null() || out.is_null() {
            return fail(AdctrCode::NullPointer, "name or out is NULL");
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            return fail(AdctrCode::InvalidArgument, "name is not UTF-8");
        };
        let problem = match get_problem(name, n) {
            Ok(p) => p,
            Err(e) => return fail(code_for(&e), e.to_string()),
        };
        let config = cfg.as_ref().map_or_else(SolverConfig::default, |c| c.inner.clone());
        let run = minimize(|x| problem.value(x), |x| problem.gradient(x), &problem.x0, &config);
        finish_run(&config, run, out)
    })
}

/// # Safety
/// `report` must come from a minimize call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn adctr_report_free(report: *mut AdctrReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Run status; a NULL report reads as `SubproblemFailure`.
///
/// # Safety
/// `report` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn adctr_report_status(report: *const AdctrReport) -> AdctrStatus {
    match report.as_ref().map(|r| r.inner.status) {
        Some(RunStatus::Converged) => AdctrStatus::Converged,
        Some(RunStatus::MaxIter) => AdctrStatus::MaxIter,
        Some(RunStatus::Stalled) => AdctrStatus::Stalled,
        Some(RunStatus::SubproblemFailure) | None => AdctrStatus::SubproblemFailure,
    }
}

/// Counters of a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdctrCounters {
    pub iters: usize,
    pub nf: usize,
    pub ng: usize,
    pub accepted: usize,
    /// Predicted-reduction bound violations (0 unless bound checking was on).
    pub bound_violations: usize,
    pub f_final: f64,
    pub gnorm_final: f64,
    pub wall_time_s: f64,
}

/// # Safety
/// `report` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adctr_report_counters(report: *const AdctrReport, out: *mut AdctrCounters) -> AdctrCode {
    let (Some(r), false) = (report.as_ref(), out.is_null()) else {
        return fail(AdctrCode::NullPointer, "report or out is NULL");
    };
    let rep = &r.inner;
    *out = AdctrCounters {
        iters: rep.iters,
        nf: rep.nf,
        ng: rep.ng,
        accepted: rep.accepted,
        bound_violations: r.violations,
        f_final: rep.f_final,
        gnorm_final: rep.gnorm_final,
        wall_time_s: rep.wall_time,
    };
    AdctrCode::Ok
}

/// Dimension of the final point (0 for a NULL report).
///
/// # Safety
/// `report` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn adctr_report_dim(report: *const AdctrReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.x_final.len())
}

/// Copy the final point into `x` (capacity `len`).
///
/// # Safety
/// `x` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn adctr_report_x(report: *const AdctrReport, x: *mut f64, len: usize) -> AdctrCode {
    let (Some(r), false) = (report.as_ref(), x.is_null()) else {
        return fail(AdctrCode::NullPointer, "report or x is NULL");
    };
    let src = &r.inner.x_final;
    if len < src.len() {
        return fail(AdctrCode::BufferTooSmall, format!("need {} entries, got {len}", src.len()));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), x, src.len());
    AdctrCode::Ok
}
