//! C ABI for `semimart`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_parse`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`SemimartStatus`]; on failure a message is stored per thread
//! and can be read with [`semimart_last_error`]. Panics never unwind into
//! the caller; they are reported as [`SemimartStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use semimart::config::{parse_config, ExperimentConfig};
use semimart::limits::{d_f_ito, d_f_jump, rho_integral, QuadratureRule};
use semimart::model::{lookup, FunctionSpec, TestFunction};
use semimart::{simulate_path, v_n, v_prime_n, Error, PathRecord};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemimartStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidArgument = 4,
    Inapplicable = 5,
    Numerical = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Which series [`semimart_functional_terminal`] evaluates.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemimartSeries {
    Vn = 0,
    VPrime = 1,
    DJump = 2,
    DIto = 3,
    RhoIntegral = 4,
}

/// A validated experiment file.
pub struct SemimartConfig(ExperimentConfig);

/// A simulated path.
pub struct SemimartPath(PathRecord);

/// A test function from the catalog.
pub struct SemimartFunction(TestFunction);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SemimartStatus {
    match e {
        Error::Config(_) => SemimartStatus::Config,
        Error::Inapplicable { .. } => SemimartStatus::Inapplicable,
        Error::Io(_) => SemimartStatus::Io,
        Error::NonFinite { .. }
        | Error::NonFiniteFunctional { .. }
        | Error::NotPsd { .. }
        | Error::TooManyDegenerate { .. } => SemimartStatus::Numerical,
        _ => SemimartStatus::InvalidArgument,
    }
}

struct Fail(SemimartStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(body: F) -> SemimartStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SemimartStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside semimart".into());
            SemimartStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(SemimartStatus::NullPointer, "null pointer argument".into())
}

unsafe fn utf8<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(SemimartStatus::InvalidUtf8, "string is not UTF-8".into()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(values: &[f64], out: *mut f64, len: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    if len < values.len() {
        return Err(Fail(
            SemimartStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn semimart_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn semimart_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses an experiment document (TOML text).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semimart_config_parse(
    text: *const c_char,
    out: *mut *mut SemimartConfig,
) -> SemimartStatus {
    guard(|| {
        let cfg = parse_config(utf8(text)?)?;
        put(out, SemimartConfig(cfg))
    })
}

/// # Safety
/// `config` must come from [`semimart_config_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn semimart_config_free(config: *mut SemimartConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Replaces the master seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn semimart_config_set_seed(config: *mut SemimartConfig, seed: u64) -> SemimartStatus {
    guard(|| {
        config.as_mut().ok_or_else(null)?.0.seed = seed;
        Ok(())
    })
}

/// Bounds the worker threads used by [`semimart_run`]; 0 lets the library
/// choose.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn semimart_config_set_workers(
    config: *mut SemimartConfig,
    workers: usize,
) -> SemimartStatus {
    guard(|| {
        config.as_mut().ok_or_else(null)?.0.workers = (workers > 0).then_some(workers);
        Ok(())
    })
}

/// Runs the experiment, writing CSVs and `summary.txt` into `out_dir`.
/// `failures`, when not null, receives the number of violated `[assert]`
/// thresholds.
///
/// # Safety
/// `config` must be a live handle, `out_dir` a NUL-terminated string and
/// `failures` null or valid.
#[no_mangle]
pub unsafe extern "C" fn semimart_run(
    config: *const SemimartConfig,
    out_dir: *const c_char,
    failures: *mut usize,
) -> SemimartStatus {
    guard(|| {
        let cfg = handle(config)?;
        let dir = utf8(out_dir)?;
        let outcome = semimart::run::run(&cfg.0, Some(Path::new(dir)))?;
        if !failures.is_null() {
            *failures = outcome.failures.len();
        }
        Ok(())
    })
}

/// Simulates one path of the config's model on its grid.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semimart_path_simulate(
    config: *const SemimartConfig,
    seed: u64,
    out: *mut *mut SemimartPath,
) -> SemimartStatus {
    guard(|| {
        let cfg = &handle(config)?.0;
        let path = simulate_path(&cfg.model, &cfg.grid, seed)?;
        put(out, SemimartPath(path))
    })
}

/// # Safety
/// `path` must come from [`semimart_path_simulate`] or be null.
#[no_mangle]
pub unsafe extern "C" fn semimart_path_free(path: *mut SemimartPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Number of grid steps `n`; 0 for a null handle.
///
/// # Safety
/// `path` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn semimart_path_steps(path: *const SemimartPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.n_steps())
}

/// Dimension `d` of `X`; 0 for a null handle.
///
/// # Safety
/// `path` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn semimart_path_dim(path: *const SemimartPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.d)
}

/// Number of recorded jumps of `X`; 0 for a null handle.
///
/// # Safety
/// `path` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn semimart_path_jumps(path: *const SemimartPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.jumps.len())
}

/// Copies the node values `x[0..=n]` (`(n+1)·d` values, row-major) into
/// `out`.
///
/// # Safety
/// `path` must be a live handle and `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn semimart_path_x(path: *const SemimartPath, out: *mut f64, len: usize) -> SemimartStatus {
    guard(|| copy_out(&handle(path)?.0.x, out, len))
}

/// Builds a parameterless catalog function, or one whose only parameter is
/// given in `param` (`r` for power functions, `k` for power_signed, `value`
/// for constant); pass NaN when unused.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semimart_function_new(
    name: *const c_char,
    d: usize,
    param: f64,
    out: *mut *mut SemimartFunction,
) -> SemimartStatus {
    guard(|| {
        let mut spec = FunctionSpec::named(utf8(name)?);
        if !param.is_nan() {
            match spec.name.as_str() {
                "power_signed" => spec.k = Some(param as u32),
                "constant" => spec.value = Some(param),
                _ => spec.r = Some(param),
            }
        }
        put(out, SemimartFunction(lookup(&spec, d)?))
    })
}

/// The config's `[function]`, if it has one.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semimart_function_from_config(
    config: *const SemimartConfig,
    out: *mut *mut SemimartFunction,
) -> SemimartStatus {
    guard(|| {
        let f = handle(config)?.0.function.clone().ok_or_else(|| {
            Fail(SemimartStatus::InvalidArgument, "config has no [function] table".into())
        })?;
        put(out, SemimartFunction(f))
    })
}

/// Output dimension `q`; 0 for a null handle.
///
/// # Safety
/// `f` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn semimart_function_dim(f: *const SemimartFunction) -> usize {
    f.as_ref().map_or(0, |f| f.0.q())
}

/// # Safety
/// `f` must come from a `semimart_function_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn semimart_function_free(f: *mut SemimartFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Terminal value of a functional or limit series (`q` values) of `f` on
/// `path`. [`SemimartSeries::RhoIntegral`] uses the default quadrature.
///
/// # Safety
/// Handles must be live and `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn semimart_functional_terminal(
    f: *const SemimartFunction,
    path: *const SemimartPath,
    series: SemimartSeries,
    out: *mut f64,
    len: usize,
) -> SemimartStatus {
    guard(|| {
        let (f, path) = (&handle(f)?.0, &handle(path)?.0);
        let s = match series {
            SemimartSeries::Vn => v_n(f, path)?,
            SemimartSeries::VPrime => v_prime_n(f, path)?,
            SemimartSeries::DJump => d_f_jump(f, path)?,
            SemimartSeries::DIto => d_f_ito(f, path)?,
            SemimartSeries::RhoIntegral => rho_integral(f, path, &QuadratureRule::default_for(path.m)?)?,
        };
        copy_out(s.terminal(), out, len)
    })
}

/// One-sample Kolmogorov–Smirnov test against N(0, 1).
///
/// # Safety
/// `samples` must point to `len` values; `statistic` and `p_value` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn semimart_ks_test(
    samples: *const f64,
    len: usize,
    statistic: *mut f64,
    p_value: *mut f64,
) -> SemimartStatus {
    guard(|| {
        if samples.is_null() || statistic.is_null() || p_value.is_null() {
            return Err(null());
        }
        let r = semimart::ks_test(std::slice::from_raw_parts(samples, len))?;
        *statistic = r.statistic;
        *p_value = r.p_value;
        Ok(())
    })
}
