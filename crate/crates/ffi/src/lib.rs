//! C ABI over `dde-oscillation`.
//!
//! Equations live behind an opaque [`DdoEquation`] handle created from the
//! JSON config format and released with [`ddo_equation_free`]. Every fallible
//! call returns a [`DdoStatus`]; on failure the message is available from
//! [`ddo_last_error_message`] on the same thread. Strings returned through
//! `char **` out-parameters are owned by the caller and must be released with
//! [`ddo_string_free`].
//!
//! The generated header is written to `include/dde_oscillation.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dde_oscillation::config::EquationConfig;
use dde_oscillation::criteria::{self, CheckOptions};
use dde_oscillation::kernel::IntegralKind;
use dde_oscillation::sim::{self, History};
use dde_oscillation::{DelayEquation, Error};

/// Opaque equation handle.
pub struct DdoEquation {
    inner: DelayEquation,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad config, argument or simulation setup.
    InvalidInput = 3,
    /// A quantity does not exist for this equation (for example
    /// `lambda0` with `alpha > 1/e`).
    Numerical = 4,
    Panic = 5,
}

/// `kind` argument of [`ddo_limsup_f`].
pub const DDO_KIND_INNER: u32 = 0;
pub const DDO_KIND_OUTER: u32 = 1;

/// `history_kind` argument of [`ddo_simulate`].
pub const DDO_HISTORY_CONSTANT: u32 = 0;
pub const DDO_HISTORY_EXPONENTIAL: u32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(DdoStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NoRealRoot(_) | Error::EnvelopeNotPeriodic(_) | Error::Inapplicable(_) => DdoStatus::Numerical,
            _ => DdoStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: DdoStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DdoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DdoStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            DdoStatus::Panic
        }
    }
}

unsafe fn equation<'a>(ptr: *const DdoEquation) -> Result<&'a DelayEquation, Failure> {
    match ptr.as_ref() {
        Some(h) => Ok(&h.inner),
        None => fail(DdoStatus::NullPointer, "equation handle is null"),
    }
}

unsafe fn out<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    match ptr.as_mut() {
        Some(p) => Ok(p),
        None => fail(DdoStatus::NullPointer, format!("{name} is null")),
    }
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    match CString::new(s) {
        Ok(c) => Ok(c.into_raw()),
        Err(_) => fail(DdoStatus::InvalidInput, "output contains a NUL byte"),
    }
}

/// Parses and validates a JSON config. On success `*out_handle` owns a new
/// handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_handle` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddo_equation_from_json(json: *const c_char, out_handle: *mut *mut DdoEquation) -> DdoStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = ptr::null_mut();
        if json.is_null() {
            return fail(DdoStatus::NullPointer, "json is null");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(DdoStatus::InvalidUtf8, format!("json is not UTF-8: {e}")),
        };
        let cfg = EquationConfig::from_json(text).map_err(Error::from)?;
        let inner = cfg.to_equation(Some(text)).map_err(Error::from)?;
        *slot = Box::into_raw(Box::new(DdoEquation { inner }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` must come from [`ddo_equation_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ddo_equation_free(handle: *mut DdoEquation) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of delay terms and common period.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddo_equation_shape(
    handle: *const DdoEquation,
    out_terms: *mut usize,
    out_period: *mut f64,
) -> DdoStatus {
    guard(|| {
        let eq = equation(handle)?;
        *out(out_terms, "out_terms")? = eq.m();
        *out(out_period, "out_period")? = eq.period();
        Ok(())
    })
}

/// `alpha = liminf int_{tau_max(t)}^t sum p_i`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddo_alpha(handle: *const DdoEquation, tol: f64, out_value: *mut f64) -> DdoStatus {
    guard(|| {
        let eq = equation(handle)?;
        let slot = out(out_value, "out_value")?;
        *slot = criteria::alpha(eq, tol)?;
        Ok(())
    })
}

/// Smallest root of `lambda = exp(alpha lambda)`; `Numerical` when
/// `alpha > 1/e`.
///
/// # Safety
/// `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddo_lambda0(alpha: f64, out_value: *mut f64) -> DdoStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = criteria::lambda0(alpha)?;
        Ok(())
    })
}

/// limsup of `F_inner` (`kind` = [`DDO_KIND_INNER`]) or `F_outer` at depth `r`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddo_limsup_f(
    handle: *const DdoEquation,
    r: u32,
    kind: u32,
    tol: f64,
    out_value: *mut f64,
) -> DdoStatus {
    guard(|| {
        let eq = equation(handle)?;
        let slot = out(out_value, "out_value")?;
        let kind = match kind {
            DDO_KIND_INNER => IntegralKind::Inner,
            DDO_KIND_OUTER => IntegralKind::Outer,
            k => return fail(DdoStatus::InvalidInput, format!("unknown integral kind {k}")),
        };
        *slot = criteria::limsup_f(eq, r as usize, kind, tol)?;
        Ok(())
    })
}

/// Runs every criterion and returns the report as JSON in `*out_json`
/// (free with [`ddo_string_free`]). `*out_oscillatory` is 1 when some
/// criterion is satisfied.
///
/// # Safety
/// Pointers must be valid; `out_oscillatory` may be null.
#[no_mangle]
pub unsafe extern "C" fn ddo_check(
    handle: *const DdoEquation,
    r: u32,
    tol: f64,
    out_json: *mut *mut c_char,
    out_oscillatory: *mut i32,
) -> DdoStatus {
    guard(|| {
        let eq = equation(handle)?;
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        let opts = CheckOptions {
            r: r as usize,
            tol,
            ..CheckOptions::default()
        };
        let report = criteria::check_all(eq, &opts)?;
        if let Some(flag) = out_oscillatory.as_mut() {
            *flag = (report.overall == criteria::Overall::Oscillatory) as i32;
        }
        let json = serde_json::to_string(&report).map_err(|e| Failure(DdoStatus::Numerical, e.to_string()))?;
        *slot = c_string(json)?;
        Ok(())
    })
}

/// Integrates on `[0, t_end]` and reports the number of sign changes and the
/// first one (NaN when there is none).
///
/// # Safety
/// Pointers must be valid; `out_first` may be null.
#[no_mangle]
pub unsafe extern "C" fn ddo_simulate(
    handle: *const DdoEquation,
    history_kind: u32,
    history_value: f64,
    t_end: f64,
    step: f64,
    out_sign_changes: *mut usize,
    out_first: *mut f64,
) -> DdoStatus {
    guard(|| {
        let eq = equation(handle)?;
        let count = out(out_sign_changes, "out_sign_changes")?;
        let history = match history_kind {
            DDO_HISTORY_CONSTANT => History::Constant(history_value),
            DDO_HISTORY_EXPONENTIAL => History::Exponential(history_value),
            k => return fail(DdoStatus::InvalidInput, format!("unknown history kind {k}")),
        };
        let traj = sim::integrate(eq, &history, t_end, step)?;
        *count = traj.sign_changes().len();
        if let Some(first) = out_first.as_mut() {
            *first = traj.first_sign_change().unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ddo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ddo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
