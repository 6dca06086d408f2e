//! C ABI over `percoflow`.
//!
//! Distributions live behind an opaque [`PercoflowDist`] handle. Every
//! fallible call returns a [`PercoflowStatus`] and writes its result through
//! an out-pointer; on failure a message is available from
//! [`percoflow_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use percoflow::error::Error;
use percoflow::exchange::{self, Recurrence};
use percoflow::graphs::GraphWindow;
use percoflow::percolation::{self, CensusConfig};
use percoflow::stream::stream;
use percoflow::{tree, DistributionSpec};

/// Status codes. The nonzero codes shared with the CLI carry the same values
/// as its exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PercoflowStatus {
    Ok = 0,
    InvalidArgument = 2,
    NonConvergence = 3,
    CheckFailed = 4,
    NullPointer = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Recurrence class of the exchange chain.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PercoflowClass {
    PositiveRecurrent = 0,
    NullRecurrent = 1,
    Transient = 2,
}

/// Opaque distribution handle.
pub struct PercoflowDist {
    spec: DistributionSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(err: Error) -> PercoflowStatus {
    let status = match err {
        Error::NonConvergence { .. } | Error::Saturation { .. } => PercoflowStatus::NonConvergence,
        Error::CouplingMismatch { .. } => PercoflowStatus::CheckFailed,
        _ => PercoflowStatus::InvalidArgument,
    };
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> PercoflowStatus) -> PercoflowStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            PercoflowStatus::Panic
        }
    }
}

fn null() -> PercoflowStatus {
    set_error("null pointer argument");
    PercoflowStatus::NullPointer
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn percoflow_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(
        concat!("v", env!("CARGO_PKG_VERSION"), "\0").as_bytes(),
    ) {
        Ok(s) => s,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn percoflow_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

fn hand_out(
    spec: Result<DistributionSpec, Error>,
    out: *mut *mut PercoflowDist,
) -> PercoflowStatus {
    if out.is_null() {
        return null();
    }
    match spec {
        Ok(spec) => {
            // SAFETY: out is non-null and the caller promises it is writable.
            unsafe { *out = Box::into_raw(Box::new(PercoflowDist { spec })) };
            PercoflowStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Builds a distribution from its JSON form, e.g.
/// `{"head": [0.5], "tail": {"model": "geometric", "p": 0.5}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn percoflow_dist_from_json(
    json: *const c_char,
    out: *mut *mut PercoflowDist,
) -> PercoflowStatus {
    guard(|| {
        if json.is_null() {
            return null();
        }
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("spec is not valid UTF-8");
                return PercoflowStatus::InvalidArgument;
            }
        };
        hand_out(serde_json::from_str(text).map_err(Error::from), out)
    })
}

/// Uniform law on `{0, …, m−1}`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn percoflow_dist_uniform(m: usize, out: *mut *mut PercoflowDist) -> PercoflowStatus {
    guard(|| hand_out(DistributionSpec::uniform(m), out))
}

/// `μ_n = (1 − p)pⁿ`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn percoflow_dist_geometric(p: f64, out: *mut *mut PercoflowDist) -> PercoflowStatus {
    guard(|| hand_out(DistributionSpec::geometric(p), out))
}

/// Power tail `T(n) = c/n` with the default uniform head.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn percoflow_dist_power(c: f64, out: *mut *mut PercoflowDist) -> PercoflowStatus {
    guard(|| hand_out(DistributionSpec::power(c), out))
}

/// `μ_0 = 1 − p`, `μ_n = p`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn percoflow_dist_two_point(
    n: usize,
    p: f64,
    out: *mut *mut PercoflowDist,
) -> PercoflowStatus {
    guard(|| hand_out(DistributionSpec::two_point(n, p), out))
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `dist` must come from one of the constructors and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn percoflow_dist_free(dist: *mut PercoflowDist) {
    if !dist.is_null() {
        // SAFETY: the caller hands back ownership of a Box we created.
        drop(unsafe { Box::from_raw(dist) });
    }
}

/// Borrows the spec behind a handle.
///
/// # Safety
/// `dist` must be null or a live handle.
unsafe fn spec<'a>(dist: *const PercoflowDist) -> Option<&'a DistributionSpec> {
    // SAFETY: forwarded to the caller.
    unsafe { dist.as_ref() }.map(|d| &d.spec)
}

/// # Safety
/// `buf` must point to `len` writable values (or be NULL when `len == 0`).
unsafe fn out_slice<'a, T>(buf: *mut T, len: usize) -> Option<&'a mut [T]> {
    if len == 0 {
        return Some(&mut []);
    }
    if buf.is_null() {
        return None;
    }
    // SAFETY: forwarded to the caller.
    Some(unsafe { std::slice::from_raw_parts_mut(buf, len) })
}

/// `F(k)`.
///
/// # Safety
/// `dist` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn percoflow_dist_cdf(dist: *const PercoflowDist, k: u64, out: *mut f64) -> PercoflowStatus {
    guard(|| {
        let (Some(s), false) = (unsafe { spec(dist) }, out.is_null()) else {
            return null();
        };
        unsafe { *out = s.cdf(k) };
        PercoflowStatus::Ok
    })
}

/// Fills `buf` with draws `0..len` of stream `index` under `seed`.
///
/// # Safety
/// `dist` must be a live handle and `buf` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn percoflow_dist_sample(
    dist: *const PercoflowDist,
    seed: u64,
    index: u64,
    buf: *mut u64,
    len: usize,
) -> PercoflowStatus {
    guard(|| {
        let (Some(s), Some(buf)) = (unsafe { spec(dist) }, unsafe { out_slice(buf, len) }) else {
            return null();
        };
        let mut rng = stream(seed, "ffi.sample", index);
        buf.iter_mut().for_each(|v| *v = s.sample(&mut rng));
        PercoflowStatus::Ok
    })
}

/// Recurrence class of the exchange chain.
///
/// # Safety
/// `dist` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn percoflow_classify(
    dist: *const PercoflowDist,
    out: *mut PercoflowClass,
) -> PercoflowStatus {
    guard(|| {
        let (Some(s), false) = (unsafe { spec(dist) }, out.is_null()) else {
            return null();
        };
        let class = match exchange::classify(s) {
            Recurrence::PositiveRecurrent => PercoflowClass::PositiveRecurrent,
            Recurrence::NullRecurrent => PercoflowClass::NullRecurrent,
            Recurrence::Transient => PercoflowClass::Transient,
        };
        unsafe { *out = class };
        PercoflowStatus::Ok
    })
}

/// Stationary measure `τ_0..τ_{len−1}`, normalized if requested (which needs
/// a finite mean), otherwise with `τ_0 = 1`. Finite support stops at the
/// last state; `written` receives the number of values stored.
///
/// # Safety
/// `dist` must be a live handle, `buf` hold `len` values, `written` writable.
#[no_mangle]
pub unsafe extern "C" fn percoflow_stationary(
    dist: *const PercoflowDist,
    normalized: bool,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> PercoflowStatus {
    guard(|| {
        let (Some(s), Some(buf), false) =
            (unsafe { spec(dist) }, unsafe { out_slice(buf, len) }, written.is_null())
        else {
            return null();
        };
        if len < 2 {
            set_error("buffer needs room for at least two values");
            return PercoflowStatus::BufferTooSmall;
        }
        let tau = match exchange::stationary_measure(s, len - 1) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let values = if normalized {
            match tau.normalized {
                Some(v) => v,
                None => {
                    set_error("stationary measure is not normalizable");
                    return PercoflowStatus::InvalidArgument;
                }
            }
        } else {
            tau.unnormalized
        };
        buf[..values.len()].copy_from_slice(&values);
        unsafe { *written = values.len() };
        PercoflowStatus::Ok
    })
}

/// `q_m = ∏_{j≤m} F(j)` for `m < len`.
///
/// # Safety
/// `dist` must be a live handle and `buf` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn percoflow_q_sequence(dist: *const PercoflowDist, buf: *mut f64, len: usize) -> PercoflowStatus {
    guard(|| {
        let (Some(s), Some(buf)) = (unsafe { spec(dist) }, unsafe { out_slice(buf, len) }) else {
            return null();
        };
        if len == 0 {
            return PercoflowStatus::Ok;
        }
        buf.copy_from_slice(&percolation::q_sequence(s, len - 1));
        PercoflowStatus::Ok
    })
}

/// `r_m` on the `arity`-ary tree for `m < len`.
///
/// # Safety
/// `dist` must be a live handle and `buf` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn percoflow_r_sequence(
    dist: *const PercoflowDist,
    arity: usize,
    buf: *mut f64,
    len: usize,
) -> PercoflowStatus {
    guard(|| {
        let (Some(s), Some(buf)) = (unsafe { spec(dist) }, unsafe { out_slice(buf, len) }) else {
            return null();
        };
        if len < 2 {
            set_error("buffer needs room for at least two values");
            return PercoflowStatus::BufferTooSmall;
        }
        match tree::r_recurrence(s, arity, len - 1) {
            Ok(r) => {
                buf.copy_from_slice(&r.values);
                PercoflowStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Perron root of the mean-matrix block of the given size.
///
/// # Safety
/// `dist` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn percoflow_rho_m(
    dist: *const PercoflowDist,
    size: usize,
    tol: f64,
    out: *mut f64,
) -> PercoflowStatus {
    guard(|| {
        let (Some(s), false) = (unsafe { spec(dist) }, out.is_null()) else {
            return null();
        };
        match tree::rho_m(s, size, tol) {
            Ok(est) => {
                unsafe { *out = est.value };
                PercoflowStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Perron root of the transition-matrix block of the given size.
///
/// # Safety
/// `dist` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn percoflow_spectral_radius(
    dist: *const PercoflowDist,
    size: usize,
    tol: f64,
    out: *mut f64,
) -> PercoflowStatus {
    guard(|| {
        let (Some(s), false) = (unsafe { spec(dist) }, out.is_null()) else {
            return null();
        };
        match exchange::spectral_radius(s, size, tol) {
            Ok(est) => {
                unsafe { *out = est.value };
                PercoflowStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Checks the covered set of `{0..steps}` against the chain's positive
/// states on one sample. `PERCOFLOW_STATUS_CHECK_FAILED` on mismatch.
///
/// # Safety
/// `dist` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn percoflow_coupling_check(
    dist: *const PercoflowDist,
    steps: usize,
    seed: u64,
) -> PercoflowStatus {
    guard(|| {
        let Some(s) = (unsafe { spec(dist) }) else {
            return null();
        };
        match percolation::coupling_check(s, steps, &mut stream(seed, "ffi.coupling", 0)) {
            Ok(()) => PercoflowStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Mean and variance of the uncovered count on `{0..window}` over `trials`
/// samples.
///
/// # Safety
/// `dist` must be a live handle; `mean` and `variance` writable.
#[no_mangle]
pub unsafe extern "C" fn percoflow_census_line(
    dist: *const PercoflowDist,
    window: usize,
    trials: u64,
    seed: u64,
    workers: usize,
    mean: *mut f64,
    variance: *mut f64,
) -> PercoflowStatus {
    guard(|| {
        let (Some(s), false, false) = (unsafe { spec(dist) }, mean.is_null(), variance.is_null()) else {
            return null();
        };
        let config = CensusConfig {
            trials,
            seed,
            workers,
            clusters: false,
        };
        let result = GraphWindow::natural(1, window)
            .and_then(|w| percolation::uncovered_census(&w, s, &config));
        match result {
            Ok(stats) => {
                unsafe {
                    *mean = stats.mean;
                    *variance = stats.variance;
                }
                PercoflowStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
