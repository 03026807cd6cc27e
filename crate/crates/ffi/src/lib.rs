//! C ABI over `amoc_ci`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` /
//! `amoc_fit` / `amoc_limit_simulate` and released by the matching `*_free`.
//! Every fallible call returns an [`AmocStatus`]; on failure a message is
//! available from [`amoc_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use amoc_ci::bootstrap::bootstrap_ci;
use amoc_ci::limitdist::quantile;
use amoc_ci::lrv::default_window;
use amoc_ci::{
    asymptotic_ci, bartlett_lrv, bootstrap_distribution, compute_cusum, fit_amoc, BlockScheme,
    BootstrapConfig, BootstrapDistribution, ChangePointFit, ConfidenceInterval, Error, GridMode,
    LimitLawConfig, LimitSamples, TimeSeries,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmocStatus {
    Ok = 0,
    /// Null pointer, out-of-range parameter or unknown enum value.
    InvalidArgument = 1,
    /// Series too short or containing non-finite values.
    DataError = 2,
    /// Limit-law simulation hit the grid boundary too often.
    NumericalGuard = 3,
    /// Estimated shift is zero; the asymptotic interval is undefined.
    ZeroShift = 4,
    /// Output buffer too small.
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

pub const AMOC_SCHEME_CIRCULAR_OVERLAPPING: u32 = 0;
pub const AMOC_SCHEME_CIRCULAR_NONOVERLAPPING: u32 = 1;
pub const AMOC_GRID_DRIFT_SCALED: u32 = 0;
pub const AMOC_GRID_FIXED: u32 = 1;

/// Opaque series handle.
pub struct AmocSeries(TimeSeries);
/// Opaque change-point fit handle.
pub struct AmocFit(ChangePointFit);
/// Opaque bootstrap distribution handle.
pub struct AmocBootstrap(BootstrapDistribution);
/// Opaque limit-law sample handle.
pub struct AmocLimitSamples(LimitSamples);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct AmocFitSummary {
    pub n: usize,
    pub m_hat: usize,
    pub mu1_hat: f64,
    pub mu2_hat: f64,
    pub d_hat: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct AmocLrv {
    pub tau2: f64,
    pub raw_tau2: f64,
    pub lambda: usize,
    pub floored: bool,
}

/// Unclipped interval; `level` is the nominal coverage `1 - alpha`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct AmocInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct AmocLimitConfig {
    pub theta: f64,
    pub gamma: f64,
    pub half_width: f64,
    pub step: f64,
    pub replicates: usize,
    pub seed: u64,
    /// `AMOC_GRID_DRIFT_SCALED` or `AMOC_GRID_FIXED`.
    pub grid: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AmocStatus {
    match e {
        Error::SeriesTooShort { .. } | Error::NonFinite { .. } | Error::LengthMismatch { .. } => {
            AmocStatus::DataError
        }
        Error::BoundaryHits { .. } => AmocStatus::NumericalGuard,
        Error::ZeroShift => AmocStatus::ZeroShift,
        _ => AmocStatus::InvalidArgument,
    }
}

struct Fail(AmocStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(AmocStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AmocStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AmocStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            AmocStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| invalid(&format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| invalid(&format!("{what} is null")))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn interval(ci: ConfidenceInterval) -> AmocInterval {
    AmocInterval {
        lower: ci.lower,
        upper: ci.upper,
        level: ci.level,
    }
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn amoc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn amoc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `len` values into a new series handle.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_series_new(values: *const f64, len: usize, out_series: *mut *mut AmocSeries) -> AmocStatus {
    guard(|| {
        let slot = out(out_series, "out_series")?;
        *slot = ptr::null_mut();
        if values.is_null() {
            return Err(invalid("values is null"));
        }
        let data = std::slice::from_raw_parts(values, len).to_vec();
        *slot = boxed(AmocSeries(TimeSeries::new(data)?));
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a handle from `amoc_series_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amoc_series_free(series: *mut AmocSeries) {
    free(series)
}

/// Length of the series, 0 for null.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn amoc_series_len(series: *const AmocSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Writes `S_gamma(1..n-1)` into `buffer`, which must hold `n - 1` values.
///
/// # Safety
/// `series` must be a live handle and `buffer` writable for `buffer_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn amoc_cusum(
    series: *const AmocSeries,
    gamma: f64,
    buffer: *mut f64,
    buffer_len: usize,
) -> AmocStatus {
    guard(|| {
        let s = borrow(series, "series")?;
        let stats = compute_cusum(&s.0, gamma)?;
        let v = stats.values();
        if buffer.is_null() {
            return Err(invalid("buffer is null"));
        }
        if buffer_len < v.len() {
            return Err(Fail(
                AmocStatus::BufferTooSmall,
                format!("buffer holds {buffer_len} values, need {}", v.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buffer, v.len()).copy_from_slice(v);
        Ok(())
    })
}

/// Fits the single change-point model.
///
/// # Safety
/// `series` must be a live handle; `out_fit` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_fit(series: *const AmocSeries, gamma: f64, out_fit: *mut *mut AmocFit) -> AmocStatus {
    guard(|| {
        let slot = out(out_fit, "out_fit")?;
        *slot = ptr::null_mut();
        let s = borrow(series, "series")?;
        *slot = boxed(AmocFit(fit_amoc(&s.0, gamma)?));
        Ok(())
    })
}

/// # Safety
/// `fit` must be a live handle; `summary` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_fit_summary(fit: *const AmocFit, summary: *mut AmocFitSummary) -> AmocStatus {
    guard(|| {
        let f = &borrow(fit, "fit")?.0;
        *out(summary, "summary")? = AmocFitSummary {
            n: f.n(),
            m_hat: f.m_hat,
            mu1_hat: f.mu1_hat,
            mu2_hat: f.mu2_hat,
            d_hat: f.d_hat,
        };
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn amoc_fit_free(fit: *mut AmocFit) {
    free(fit)
}

/// Bartlett long-run variance around `m_hat`. `lambda = 0` selects the
/// default window `max(1, floor(0.1 n))`.
///
/// # Safety
/// `series` must be a live handle; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_bartlett_lrv(
    series: *const AmocSeries,
    m_hat: usize,
    lambda: usize,
    result: *mut AmocLrv,
) -> AmocStatus {
    guard(|| {
        let s = &borrow(series, "series")?.0;
        let lambda = if lambda == 0 { default_window(s.len()) } else { lambda };
        let est = bartlett_lrv(s, m_hat, lambda)?;
        *out(result, "result")? = AmocLrv {
            tau2: est.tau2,
            raw_tau2: est.raw_tau2,
            lambda: est.lambda,
            floored: est.floored,
        };
        Ok(())
    })
}

/// Block-bootstrap distribution of the change-point estimator.
///
/// # Safety
/// `fit` must be a live handle; `out_boot` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_bootstrap_new(
    fit: *const AmocFit,
    block_length: usize,
    resamples: usize,
    seed: u64,
    scheme: u32,
    out_boot: *mut *mut AmocBootstrap,
) -> AmocStatus {
    guard(|| {
        let slot = out(out_boot, "out_boot")?;
        *slot = ptr::null_mut();
        let f = &borrow(fit, "fit")?.0;
        let scheme = match scheme {
            AMOC_SCHEME_CIRCULAR_OVERLAPPING => BlockScheme::CircularOverlapping,
            AMOC_SCHEME_CIRCULAR_NONOVERLAPPING => BlockScheme::CircularNonoverlapping,
            other => return Err(invalid(&format!("unknown block scheme {other}"))),
        };
        let cfg = BootstrapConfig::new(block_length, resamples, seed).with_scheme(scheme);
        *slot = boxed(AmocBootstrap(bootstrap_distribution(f, &cfg)?));
        Ok(())
    })
}

/// Number of bootstrap draws, 0 for null.
///
/// # Safety
/// `boot` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn amoc_bootstrap_len(boot: *const AmocBootstrap) -> usize {
    boot.as_ref().map_or(0, |b| b.0.samples.len())
}

/// Copies the bootstrap change-point draws into `buffer`.
///
/// # Safety
/// `boot` must be a live handle and `buffer` writable for `buffer_len` values.
#[no_mangle]
pub unsafe extern "C" fn amoc_bootstrap_samples(
    boot: *const AmocBootstrap,
    buffer: *mut usize,
    buffer_len: usize,
) -> AmocStatus {
    guard(|| {
        let s = &borrow(boot, "boot")?.0.samples;
        if buffer.is_null() {
            return Err(invalid("buffer is null"));
        }
        if buffer_len < s.len() {
            return Err(Fail(
                AmocStatus::BufferTooSmall,
                format!("buffer holds {buffer_len} values, need {}", s.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buffer, s.len()).copy_from_slice(s);
        Ok(())
    })
}

/// # Safety
/// `boot` must be a live handle; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_bootstrap_ci(boot: *const AmocBootstrap, alpha: f64, result: *mut AmocInterval) -> AmocStatus {
    guard(|| {
        let b = &borrow(boot, "boot")?.0;
        *out(result, "result")? = interval(bootstrap_ci(b, alpha)?);
        Ok(())
    })
}

/// # Safety
/// `boot` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn amoc_bootstrap_free(boot: *mut AmocBootstrap) {
    free(boot)
}

/// Fills `config` with the default simulation settings for `(theta, gamma)`.
///
/// # Safety
/// `config` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_limit_config_default(theta: f64, gamma: f64, config: *mut AmocLimitConfig) -> AmocStatus {
    guard(|| {
        let c = LimitLawConfig::new(theta, gamma);
        *out(config, "config")? = AmocLimitConfig {
            theta: c.theta,
            gamma: c.gamma,
            half_width: c.half_width,
            step: c.step,
            replicates: c.replicates,
            seed: c.seed,
            grid: AMOC_GRID_DRIFT_SCALED,
        };
        Ok(())
    })
}

/// Simulates argmax draws of the limit law.
///
/// # Safety
/// `config` must be readable; `out_samples` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_limit_simulate(
    config: *const AmocLimitConfig,
    out_samples: *mut *mut AmocLimitSamples,
) -> AmocStatus {
    guard(|| {
        let slot = out(out_samples, "out_samples")?;
        *slot = ptr::null_mut();
        let c = borrow(config, "config")?;
        let grid = match c.grid {
            AMOC_GRID_DRIFT_SCALED => GridMode::DriftScaled,
            AMOC_GRID_FIXED => GridMode::Fixed,
            other => return Err(invalid(&format!("unknown grid mode {other}"))),
        };
        let cfg = LimitLawConfig {
            theta: c.theta,
            gamma: c.gamma,
            half_width: c.half_width,
            step: c.step,
            replicates: c.replicates,
            seed: c.seed,
            grid,
        };
        *slot = boxed(AmocLimitSamples(amoc_ci::simulate_argmax_samples(&cfg)?));
        Ok(())
    })
}

/// # Safety
/// `samples` must be a live handle; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_limit_quantile(samples: *const AmocLimitSamples, p: f64, result: *mut f64) -> AmocStatus {
    guard(|| {
        let s = &borrow(samples, "samples")?.0;
        *out(result, "result")? = quantile(s, p)?;
        Ok(())
    })
}

/// Fraction of draws that landed near the grid edge, NaN for null.
///
/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn amoc_limit_boundary_fraction(samples: *const AmocLimitSamples) -> f64 {
    samples.as_ref().map_or(f64::NAN, |s| s.0.boundary_hit_fraction())
}

/// Asymptotic interval `[m - s q(1 - alpha/2), m - s q(alpha/2)]` with
/// `s = tau2 / d_hat^2`.
///
/// # Safety
/// `samples` must be a live handle; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amoc_asymptotic_ci(
    samples: *const AmocLimitSamples,
    m_hat: usize,
    tau2: f64,
    d_hat: f64,
    alpha: f64,
    result: *mut AmocInterval,
) -> AmocStatus {
    guard(|| {
        let s = &borrow(samples, "samples")?.0;
        *out(result, "result")? = interval(asymptotic_ci(m_hat, tau2, d_hat, s, alpha)?);
        Ok(())
    })
}

/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn amoc_limit_free(samples: *mut AmocLimitSamples) {
    free(samples)
}
