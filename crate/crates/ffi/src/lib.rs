//! C ABI for orlicz-lab.
//!
//! Objects live behind opaque handles created by `ol_*_new` / `ol_*_from_json`
//! and released with the matching `ol_*_free`. Every fallible call returns an
//! [`OlStatus`] and writes its result through an out-pointer; the message for
//! the last failure on the calling thread is available from
//! [`ol_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;
use std::slice;

use orlicz_lab::hammerstein::{solve, ProblemFile, SolveOptions};
use orlicz_lab::modular::{luxemburg_norm, modular, orlicz_norm};
use orlicz_lab::{Error, GridFunction, MeasureSpace, NFunction, NFunctionSpec};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Domain = 4,
    Precondition = 5,
    DimensionMismatch = 6,
    Panic = 7,
}

/// Opaque N-function handle.
pub struct OlNFunction(NFunction);

/// Opaque discrete measure space handle.
pub struct OlSpace(MeasureSpace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: OlStatus, msg: impl Into<String>) -> OlStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> OlStatus {
    let status = match &e {
        Error::Domain(_) => OlStatus::Domain,
        Error::Precondition(_) => OlStatus::Precondition,
        Error::DimensionMismatch { .. } => OlStatus::DimensionMismatch,
        Error::InvalidSpec(_) | Error::InvalidInput(_) => OlStatus::InvalidInput,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> OlStatus + UnwindSafe) -> OlStatus {
    catch_unwind(f).unwrap_or_else(|_| fail(OlStatus::Panic, "internal panic"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, OlStatus> {
    if s.is_null() {
        return Err(fail(OlStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(OlStatus::InvalidUtf8, "string is not valid UTF-8"))
}

unsafe fn read_values<'a>(values: *const f64, len: usize) -> Result<&'a [f64], OlStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if values.is_null() {
        return Err(fail(OlStatus::NullPointer, "null array"));
    }
    Ok(slice::from_raw_parts(values, len))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(OlStatus::NullPointer, concat!("null ", stringify!($p)));
        })+
    };
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ol_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ol_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `{"kind": ..., "params": {...}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ol_nfunction_from_json(json: *const c_char, out: *mut *mut OlNFunction) -> OlStatus {
    guard(|| {
        non_null!(out);
        let text = try_status!(read_str(json));
        let spec: NFunctionSpec = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(OlStatus::InvalidInput, e.to_string()),
        };
        let m = try_status!(NFunction::new(spec).map_err(from_error));
        *out = Box::into_raw(Box::new(OlNFunction(m)));
        OlStatus::Ok
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `m` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ol_nfunction_free(m: *mut OlNFunction) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// `M(u)` for `u >= 0`.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ol_nfunction_eval(m: *const OlNFunction, u: f64, out: *mut f64) -> OlStatus {
    guard(|| {
        non_null!(m, out);
        *out = try_status!((*m).0.eval(u).map_err(from_error));
        OlStatus::Ok
    })
}

/// `M^{-1}(y)` for `y >= 0`.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ol_nfunction_inverse(m: *const OlNFunction, y: f64, out: *mut f64) -> OlStatus {
    guard(|| {
        non_null!(m, out);
        *out = try_status!((*m).0.inverse(y).map_err(from_error));
        OlStatus::Ok
    })
}

/// New handle for the complementary N-function.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ol_nfunction_conjugate(m: *const OlNFunction, out: *mut *mut OlNFunction) -> OlStatus {
    guard(|| {
        non_null!(m, out);
        *out = Box::into_raw(Box::new(OlNFunction((*m).0.conjugate())));
        OlStatus::Ok
    })
}

/// Space with the given positive cell weights.
///
/// # Safety
/// `weights` must point to `len` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ol_space_new(weights: *const f64, len: usize, out: *mut *mut OlSpace) -> OlStatus {
    guard(|| {
        non_null!(out);
        let w = try_status!(read_values(weights, len));
        let space = try_status!(MeasureSpace::new(w.to_vec()).map_err(from_error));
        *out = Box::into_raw(Box::new(OlSpace(space)));
        OlStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ol_space_free(s: *mut OlSpace) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of cells, 0 for NULL.
///
/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ol_space_len(s: *const OlSpace) -> usize {
    if s.is_null() {
        0
    } else {
        (*s).0.len()
    }
}

type NormFn = fn(&NFunction, &MeasureSpace, &GridFunction) -> orlicz_lab::Result<f64>;

unsafe fn grid_call(
    f: NormFn,
    m: *const OlNFunction,
    s: *const OlSpace,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> OlStatus {
    guard(|| {
        non_null!(m, s, out);
        let values = try_status!(read_values(x, len));
        let x = try_status!(GridFunction::new(values.to_vec()).map_err(from_error));
        *out = try_status!(f(&(*m).0, &(*s).0, &x).map_err(from_error));
        OlStatus::Ok
    })
}

/// Modular `sum M(|x_i|) mu_i`.
///
/// # Safety
/// Handles must be live, `x` must point to `len` doubles, `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ol_modular(
    m: *const OlNFunction,
    s: *const OlSpace,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> OlStatus {
    grid_call(modular, m, s, x, len, out)
}

/// Luxemburg norm.
///
/// # Safety
/// As for [`ol_modular`].
#[no_mangle]
pub unsafe extern "C" fn ol_luxemburg_norm(
    m: *const OlNFunction,
    s: *const OlSpace,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> OlStatus {
    grid_call(luxemburg_norm, m, s, x, len, out)
}

/// Orlicz norm.
///
/// # Safety
/// As for [`ol_modular`].
#[no_mangle]
pub unsafe extern "C" fn ol_orlicz_norm(
    m: *const OlNFunction,
    s: *const OlSpace,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> OlStatus {
    grid_call(orlicz_norm, m, s, x, len, out)
}

/// Solves a Hammerstein problem given as JSON and writes the result JSON to
/// `result_json` (free with [`ol_string_free`]) and the solver exit code
/// (0 solved, 2 certificates failed, 3 not converged) to `exit_code`.
/// `tol <= 0` keeps the default tolerance.
///
/// # Safety
/// `problem_json` must be NUL-terminated; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ol_solve_json(
    problem_json: *const c_char,
    seed: u64,
    tol: f64,
    result_json: *mut *mut c_char,
    exit_code: *mut i32,
) -> OlStatus {
    guard(|| {
        non_null!(result_json, exit_code);
        let text = try_status!(read_str(problem_json));
        let file: ProblemFile = match serde_json::from_str(text) {
            Ok(f) => f,
            Err(e) => return fail(OlStatus::InvalidInput, e.to_string()),
        };
        let problem = try_status!(file.into_problem().map_err(from_error));
        let mut options = SolveOptions { seed, ..Default::default() };
        if tol > 0.0 {
            options.tol = tol;
        }
        let result = try_status!(solve(&problem, &options).map_err(from_error));
        let json = serde_json::to_string(&result).expect("serializable result");
        *exit_code = result.exit_code();
        *result_json = CString::new(json).expect("json has no nul").into_raw();
        OlStatus::Ok
    })
}

/// Frees a string returned by this library; NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ol_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
