//! C ABI for `gradpower`.
//!
//! Every fallible function returns a [`GpStatus`] and writes results through
//! out-pointers. On failure, [`gp_last_error`] returns a message describing
//! the most recent error on the calling thread. Models are opaque handles
//! created with [`gp_model_new`] and released with [`gp_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gradpower::expansion::{composite_coefficients, CumulantTensors};
use gradpower::expfam::{catalog_model, cumulants, parse_fixed, CatalogModel};
use gradpower::localpower::{local_powers, power_coefficients, CoefficientSource, PowerQuery};
use gradpower::montecarlo::{simulate, SimulationConfig};
use gradpower::specfun::{central_chisq_quantile, nc_chisq_cdf, nc_chisq_pdf, ChiSquareParams};
use gradpower::teststats::compute_statistics;
use gradpower::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Estimation = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

/// Coefficient source for the gradient test's `a_40`.
pub const GP_SOURCE_CONSISTENT_CHAIN: u32 = 0;
pub const GP_SOURCE_PAPER_TABLE: u32 = 1;

/// Opaque model handle.
pub struct GpModel {
    inner: CatalogModel,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GpCumulants {
    pub k_tt: f64,
    pub k_ttt: f64,
    pub k_t_tt: f64,
    pub k_t_t_t: f64,
    pub k_inv: f64,
}

/// Statistics in the order LR, Wald, score, gradient.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GpTestResult {
    pub theta_hat: f64,
    pub d_bar: f64,
    pub statistics: [f64; 4],
    pub p_values: [f64; 4],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GpExpansion {
    pub f: f64,
    pub lambda: f64,
    pub a: [f64; 4],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GpSimulationSummary {
    pub completed: u64,
    pub failures: u64,
    pub rejection_rate: [f64; 4],
    pub mc_stderr: [f64; 4],
    /// Consistent-chain predictions.
    pub predicted_power: [f64; 4],
    pub gradient_mean: f64,
    pub gradient_mean_se: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> GpStatus {
    match e {
        Error::Domain(_) => GpStatus::Domain,
        Error::Invalid(_) => GpStatus::InvalidArgument,
        Error::Estimation(_) => GpStatus::Estimation,
        Error::Numerical(_) => GpStatus::Numerical,
        Error::Io(_) => GpStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> GpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GpStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed for `{name}`"));
            GpStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            GpStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            GpStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Arg(format!("`{name}` is not valid UTF-8")))
}

unsafe fn model_arg<'a>(p: *const GpModel) -> Result<&'a CatalogModel, Failure> {
    p.as_ref().map(|m| &m.inner).ok_or(Failure::Null("model"))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn source_arg(source: u32) -> Result<CoefficientSource, Failure> {
    match source {
        GP_SOURCE_CONSISTENT_CHAIN => Ok(CoefficientSource::ConsistentChain),
        GP_SOURCE_PAPER_TABLE => Ok(CoefficientSource::PaperTable),
        other => Err(Failure::Arg(format!("unknown coefficient source {other}"))),
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn gp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create a catalog model. `fixed` is a `key=value,...` list and may be NULL
/// or empty for models without constants.
///
/// # Safety
/// `name` and `fixed` must be NULL or valid NUL-terminated strings; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gp_model_new(name: *const c_char, fixed: *const c_char, out: *mut *mut GpModel) -> GpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let fixed = if fixed.is_null() { "" } else { str_arg(fixed, "fixed")? };
        let inner = catalog_model(name, &parse_fixed(fixed)?)?;
        *out = Box::into_raw(Box::new(GpModel { inner }));
        Ok(())
    })
}

/// Release a model. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle from [`gp_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gp_model_free(model: *mut GpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Joint cumulants of the log-likelihood derivatives at `theta`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gp_cumulants(model: *const GpModel, theta: f64, out: *mut GpCumulants) -> GpStatus {
    guard(|| {
        let m = model_arg(model)?;
        let out = out_arg(out, "out")?;
        let c = cumulants(m, theta)?;
        *out = GpCumulants { k_tt: c.k_tt, k_ttt: c.k_ttt, k_t_tt: c.k_t_tt, k_t_t_t: c.k_t_t_t, k_inv: c.k_inv };
        Ok(())
    })
}

/// The four test statistics of `H0: θ = theta0` for `len` observations.
///
/// # Safety
/// `data` must point to `len` doubles; `model` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gp_statistics(
    model: *const GpModel,
    data: *const f64,
    len: usize,
    theta0: f64,
    out: *mut GpTestResult,
) -> GpStatus {
    guard(|| {
        let m = model_arg(model)?;
        let data = slice_arg(data, len, "data")?;
        let out = out_arg(out, "out")?;
        let r = compute_statistics(m, data, theta0)?;
        *out = GpTestResult { theta_hat: r.theta_hat, d_bar: r.d_bar, statistics: r.s, p_values: r.p_values };
        Ok(())
    })
}

/// Coefficient table `a[i][k]` written row-major into `out[16]`.
///
/// # Safety
/// `model` must be valid and `out` must point to 16 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gp_power_coefficients(
    model: *const GpModel,
    theta0: f64,
    eps: f64,
    source: u32,
    out: *mut f64,
) -> GpStatus {
    guard(|| {
        let m = model_arg(model)?;
        let source = source_arg(source)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let table = power_coefficients(m, theta0, eps, source)?;
        let out = std::slice::from_raw_parts_mut(out, 16);
        for (dst, src) in out.iter_mut().zip(table.a.iter().flatten()) {
            *dst = *src;
        }
        Ok(())
    })
}

/// Local powers of LR, Wald, score and gradient into `out[4]` (clamped to [0, 1]).
///
/// # Safety
/// `model` must be valid and `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gp_local_powers(
    model: *const GpModel,
    theta0: f64,
    eps: f64,
    n: u64,
    alpha: f64,
    source: u32,
    out: *mut f64,
) -> GpStatus {
    guard(|| {
        let m = model_arg(model)?;
        let source = source_arg(source)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let p = local_powers(m, &PowerQuery { theta0, eps, n, alpha }, source)?;
        let out = std::slice::from_raw_parts_mut(out, 4);
        for (dst, v) in out.iter_mut().zip(&p) {
            *dst = v.power;
        }
        Ok(())
    })
}

/// Noncentral chi-square CDF (`nc = 0` for central).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gp_chisq_cdf(df: f64, nc: f64, x: f64, out: *mut f64) -> GpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = nc_chisq_cdf(ChiSquareParams::new(df, nc)?, x)?;
        Ok(())
    })
}

/// Noncentral chi-square density at `x > 0`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gp_chisq_pdf(df: f64, nc: f64, x: f64, out: *mut f64) -> GpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = nc_chisq_pdf(ChiSquareParams::new(df, nc)?, x)?;
        Ok(())
    })
}

/// Central chi-square quantile.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gp_chisq_quantile(df: f64, p: f64, out: *mut f64) -> GpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = central_chisq_quantile(df, p)?;
        Ok(())
    })
}

/// Composite-hypothesis expansion from a tensor document (JSON text).
///
/// # Safety
/// `tensors_json` must be a NUL-terminated string, `eps` must point to
/// `eps_len` doubles, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gp_composite_expansion(
    tensors_json: *const c_char,
    eps: *const f64,
    eps_len: usize,
    out: *mut GpExpansion,
) -> GpStatus {
    guard(|| {
        let text = str_arg(tensors_json, "tensors_json")?;
        let eps = slice_arg(eps, eps_len, "eps")?;
        let out = out_arg(out, "out")?;
        let t = CumulantTensors::from_json(text)?;
        let e = composite_coefficients(&t, eps)?;
        *out = GpExpansion { f: e.f, lambda: e.lambda, a: e.a };
        Ok(())
    })
}

/// Seeded Monte Carlo run. `threads = 0` uses the default worker pool.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gp_simulate(
    model: *const GpModel,
    theta0: f64,
    eps: f64,
    n: u64,
    reps: u64,
    alpha: f64,
    seed: u64,
    threads: u32,
    out: *mut GpSimulationSummary,
) -> GpStatus {
    guard(|| {
        let m = model_arg(model)?;
        let out = out_arg(out, "out")?;
        let config = SimulationConfig {
            theta0,
            eps,
            n: usize::try_from(n).map_err(|_| Failure::Arg("n does not fit in usize".into()))?,
            reps: usize::try_from(reps).map_err(|_| Failure::Arg("reps does not fit in usize".into()))?,
            alpha,
            seed,
            compare_sources: false,
        };
        let threads = (threads > 0).then_some(threads as usize);
        let r = simulate(m, &config, threads)?;
        *out = GpSimulationSummary {
            completed: r.completed as u64,
            failures: r.failures as u64,
            rejection_rate: r.rejection_rate,
            mc_stderr: r.mc_stderr,
            predicted_power: r.predicted_power[0].power,
            gradient_mean: r.gradient_moments.mean,
            gradient_mean_se: r.gradient_moments.mean_se,
        };
        Ok(())
    })
}
