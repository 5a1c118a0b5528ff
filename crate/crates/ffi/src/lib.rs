//! C ABI over `spinsqueeze`.
//!
//! States live behind an opaque `SqState*` created by the `sq_state_*`
//! constructors and released with [`sq_state_free`]. Every fallible call
//! returns an [`SqStatus`]; on failure [`sq_last_error`] describes it.
//! Results are written through caller-provided pointers.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spinsqueeze::{
    fidelity, fisher_bound, fit, make_cat, make_css, make_ewss, make_sss, make_twin_fock, prob_distribution, scan_tau,
    spin_moments, CoherentSpinParams, Error, FieldEstimationParams, FitFamily, Method, Metric, PropagatorConfig,
    ScanSpec, Spin, SpinState, TwistProtocol,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Propagation = 3,
    FitFailed = 4,
    Undefined = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqMethod {
    Auto = 0,
    Dense = 1,
    Krylov = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqMetric {
    FidEwss = 0,
    FidTfs = 1,
    VarZMax = 2,
    VarYMin = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqFitFamily {
    SqPowerOffset = 0,
    ShiftedPower = 1,
    LogOverLinear = 2,
}

/// Opaque collective-spin state.
pub struct SqState(SpinState);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SqMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub var_z: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SqScanResult {
    pub tau_star: f64,
    pub value_star: f64,
    pub sd_z_star: f64,
}

/// Unused trailing slots are zero for two-parameter families.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SqFitResult {
    pub n_params: usize,
    pub params: [f64; 3],
    pub se: [f64; 3],
    pub rss: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SqFisherBound {
    pub fisher_upper: f64,
    pub sigma_lower: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SqStatus {
    match e {
        Error::Propagation(_) => SqStatus::Propagation,
        Error::Fit(_) | Error::RankDeficient(_) | Error::NotConverged { .. } => SqStatus::FitFailed,
        Error::MetricUndefined { .. } => SqStatus::Undefined,
        _ => SqStatus::InvalidArgument,
    }
}

enum Fail {
    Status(SqStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn null() -> Fail {
    Fail::Status(SqStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SqStatus::Ok,
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SqStatus::Panic
        }
    }
}

unsafe fn emit_state(out: *mut *mut SqState, s: SpinState) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(SqState(s)));
    Ok(())
}

unsafe fn state_ref<'a>(s: *const SqState) -> Result<&'a SpinState, Fail> {
    s.as_ref().map(|s| &s.0).ok_or_else(null)
}

fn config(method: SqMethod, tol: f64) -> Result<PropagatorConfig, Fail> {
    let method = match method {
        SqMethod::Auto => Method::Auto,
        SqMethod::Dense => Method::DenseExpm,
        SqMethod::Krylov => Method::Krylov,
    };
    let mut cfg = PropagatorConfig { method, ..Default::default() };
    if tol > 0.0 {
        cfg.tolerance = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Coherent spin state `|α, β⟩`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_state_css(j: f64, alpha: f64, beta: f64, out: *mut *mut SqState) -> SqStatus {
    guard(|| emit_state(out, make_css(Spin::new(j)?, CoherentSpinParams::new(alpha, beta)?)))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_state_ewss(j: f64, out: *mut *mut SqState) -> SqStatus {
    guard(|| emit_state(out, make_ewss(Spin::new(j)?)))
}

/// Twin-Fock state; integer `j` only.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_state_twin_fock(j: f64, out: *mut *mut SqState) -> SqStatus {
    guard(|| emit_state(out, make_twin_fock(Spin::new(j)?)?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_state_cat(j: f64, out: *mut *mut SqState) -> SqStatus {
    guard(|| emit_state(out, make_cat(Spin::new(j)?)))
}

/// Squeezed state after twisting for `tau` and the `π/2` readout about y.
/// `tol <= 0` selects the default tolerance.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_state_sss(
    j: f64,
    tau: f64,
    method: SqMethod,
    tol: f64,
    out: *mut *mut SqState,
) -> SqStatus {
    guard(|| {
        let cfg = config(method, tol)?;
        emit_state(out, make_sss(Spin::new(j)?, &TwistProtocol::at(tau)?, &cfg)?)
    })
}

/// Releases a state. NULL is ignored.
///
/// # Safety
/// `s` must come from an `sq_state_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sq_state_free(s: *mut SqState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Basis dimension `2J+1`, or 0 for NULL.
///
/// # Safety
/// `s` must be NULL or a live state.
#[no_mangle]
pub unsafe extern "C" fn sq_state_dim(s: *const SqState) -> usize {
    s.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies amplitudes in descending-M order into `re`/`im` (length `len`).
///
/// # Safety
/// `s` must be a live state; `re` and `im` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sq_state_amplitudes(s: *const SqState, re: *mut f64, im: *mut f64, len: usize) -> SqStatus {
    guard(|| {
        let s = state_ref(s)?;
        if re.is_null() || im.is_null() {
            return Err(null());
        }
        if len < s.dim() {
            return Err(Fail::Status(SqStatus::BufferTooSmall, format!("need {} slots, got {len}", s.dim())));
        }
        for (k, a) in s.amplitudes().iter().enumerate() {
            *re.add(k) = a.re;
            *im.add(k) = a.im;
        }
        Ok(())
    })
}

/// `P(M)` in descending-M order.
///
/// # Safety
/// `s` must be a live state; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sq_state_probabilities(s: *const SqState, out: *mut f64, len: usize) -> SqStatus {
    guard(|| {
        let s = state_ref(s)?;
        if out.is_null() {
            return Err(null());
        }
        if len < s.dim() {
            return Err(Fail::Status(SqStatus::BufferTooSmall, format!("need {} slots, got {len}", s.dim())));
        }
        for (k, p) in prob_distribution(s).into_iter().enumerate() {
            *out.add(k) = p;
        }
        Ok(())
    })
}

/// `|⟨a|b⟩|²`.
///
/// # Safety
/// `a`, `b` live states; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_fidelity(a: *const SqState, b: *const SqState, out: *mut f64) -> SqStatus {
    guard(|| {
        let v = fidelity(state_ref(a)?, state_ref(b)?)?;
        *out.as_mut().ok_or_else(null)? = v;
        Ok(())
    })
}

/// # Safety
/// `s` a live state; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_moments(s: *const SqState, out: *mut SqMoments) -> SqStatus {
    guard(|| {
        let m = spin_moments(state_ref(s)?);
        *out.as_mut().ok_or_else(null)? = SqMoments {
            mean_x: m.mean[0],
            mean_y: m.mean[1],
            mean_z: m.mean[2],
            var_x: m.variance_x,
            var_y: m.variance_y,
            var_z: m.variance_z,
        };
        Ok(())
    })
}

/// Optimal-time scan over the automatic window. `n_grid = 0` selects the
/// default resolution.
///
/// # Safety
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_scan(j: f64, metric: SqMetric, n_grid: usize, out: *mut SqScanResult) -> SqStatus {
    guard(|| {
        let metric = match metric {
            SqMetric::FidEwss => Metric::FidEwss,
            SqMetric::FidTfs => Metric::FidTfs,
            SqMetric::VarZMax => Metric::VarZMax,
            SqMetric::VarYMin => Metric::VarYMin,
        };
        let mut spec = ScanSpec::auto(Spin::new(j)?, metric);
        if n_grid > 0 {
            spec.n_grid = n_grid;
        }
        let r = scan_tau(&spec, &PropagatorConfig::default())?;
        *out.as_mut().ok_or_else(null)? =
            SqScanResult { tau_star: r.tau_star, value_star: r.value_star, sd_z_star: r.sd_z_star };
        Ok(())
    })
}

/// Least-squares fit from automatic initialization.
///
/// # Safety
/// `js`, `ys` valid for `n` reads; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_fit(
    family: SqFitFamily,
    js: *const f64,
    ys: *const f64,
    n: usize,
    out: *mut SqFitResult,
) -> SqStatus {
    guard(|| {
        if js.is_null() || ys.is_null() || out.is_null() {
            return Err(null());
        }
        let family = match family {
            SqFitFamily::SqPowerOffset => FitFamily::SqPowerOffset,
            SqFitFamily::ShiftedPower => FitFamily::ShiftedPower,
            SqFitFamily::LogOverLinear => FitFamily::LogOverLinear,
        };
        let js = std::slice::from_raw_parts(js, n);
        let ys = std::slice::from_raw_parts(ys, n);
        let r = fit(family, js, ys, None)?;
        let mut res = SqFitResult { n_params: r.model.params.len(), rss: r.rss, ..Default::default() };
        res.params[..res.n_params].copy_from_slice(&r.model.params);
        res.se[..res.n_params].copy_from_slice(&r.param_se);
        *out = res;
        Ok(())
    })
}

/// Cramér–Rao bounds for field estimation given `⟨ΔJz²⟩`.
///
/// # Safety
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sq_fisher_bound(variance_z: f64, gamma_s: f64, t: f64, out: *mut SqFisherBound) -> SqStatus {
    guard(|| {
        let b = fisher_bound(variance_z, &FieldEstimationParams::new(gamma_s, t)?)?;
        *out.as_mut().ok_or_else(null)? = SqFisherBound { fisher_upper: b.fisher_upper, sigma_lower: b.sigma_lower };
        Ok(())
    })
}
