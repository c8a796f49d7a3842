//! C ABI over `stsdiscord`.
//!
//! Every function returns an [`SdStatus`] and writes results through out
//! pointers. On failure a description is available from [`sd_last_error`]
//! on the same thread. Datasets are opaque [`SdDataset`] handles released
//! with [`sd_dataset_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stsdiscord::estimation::{self, BayesConfig, GridSpec, InversionConfig};
use stsdiscord::{fisher, homodyne, model, Error, HomodyneDataset, InfoKind, Method, PhysicalParams, StsParams};

/// Result code of every `sd_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Domain = 3,
    Numeric = 4,
    Pole = 5,
    Inconsistent = 6,
    Degenerate = 7,
    Estimation = 8,
    Io = 9,
    Format = 10,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdInfoKind {
    Quantum = 0,
    Classical = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdMethod {
    Inversion = 0,
    Bayes = 1,
}

/// Discord estimate with its uncertainty and resource count.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdEstimate {
    pub d_hat: f64,
    pub var_d: f64,
    pub ns_hat: f64,
    pub nt_hat: f64,
    pub var_ns: f64,
    pub var_nt: f64,
    pub method: SdMethod,
    pub resources_m: u64,
}

/// Opaque homodyne dataset.
pub struct SdDataset(HomodyneDataset);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SdStatus {
    match e {
        Error::InvalidParameter(_) => SdStatus::InvalidParameter,
        Error::Domain(_) => SdStatus::Domain,
        Error::Numeric(_) | Error::SingularJacobian(_) | Error::NotInvertible { .. } | Error::BasisMismatch { .. } => {
            SdStatus::Numeric
        }
        Error::Pole(_) => SdStatus::Pole,
        Error::Inconsistent(_) => SdStatus::Inconsistent,
        Error::Degenerate(_) => SdStatus::Degenerate,
        Error::RejectionRate { .. } | Error::GridCoverage(_) => SdStatus::Estimation,
        Error::Io { .. } => SdStatus::Io,
        Error::MalformedRow { .. } | Error::FormatVersion { .. } | Error::Schema { .. } | Error::Json(_) | Error::Csv(_) => {
            SdStatus::Format
        }
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            SdStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SdStatus::Panic
        }
    }
}

fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    // SAFETY: the caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or(Fail::Null(what))
}

fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    // SAFETY: non-null and, per the contract, NUL-terminated.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail::Lib(Error::InvalidParameter("path is not valid UTF-8".into())))?;
    Ok(Path::new(s))
}

fn dataset_ref<'a>(ds: *const SdDataset) -> Result<&'a HomodyneDataset, Fail> {
    // SAFETY: handles come from `sd_dataset_*` constructors and are live.
    unsafe { ds.as_ref() }.map(|d| &d.0).ok_or(Fail::Null("dataset"))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Binary entropy `h(x)` in nats, `x >= 1/2`.
#[no_mangle]
pub extern "C" fn sd_binary_entropy(x: f64, out: *mut f64) -> SdStatus {
    guard(|| {
        *out_ref(out, "out")? = model::binary_entropy(x)?;
        Ok(())
    })
}

/// Gaussian discord of the STS `(n_s, n_t)`.
#[no_mangle]
pub extern "C" fn sd_sts_discord(n_s: f64, n_t: f64, out: *mut f64) -> SdStatus {
    guard(|| {
        let p = StsParams::new(n_s, n_t)?;
        *out_ref(out, "out")? = model::sts_discord(&p);
        Ok(())
    })
}

/// Squeezed and anti-squeezed quadrature variances (vacuum = 1).
#[no_mangle]
pub extern "C" fn sd_quadrature_variances(n_s: f64, n_t: f64, s_sq: *mut f64, s_asq: *mut f64) -> SdStatus {
    guard(|| {
        let (s, a) = model::quadrature_variances(&StsParams::new(n_s, n_t)?);
        *out_ref(s_sq, "s_sq")? = s;
        *out_ref(s_asq, "s_asq")? = a;
        Ok(())
    })
}

/// `(n_s, n_t)` recovered from the two quadrature variances.
#[no_mangle]
pub extern "C" fn sd_invert_variances(s_sq: f64, s_asq: f64, n_s: *mut f64, n_t: *mut f64) -> SdStatus {
    guard(|| {
        let p = estimation::invert_variances(s_sq, s_asq)?;
        *out_ref(n_s, "n_s")? = p.n_s();
        *out_ref(n_t, "n_t")? = p.n_t();
        Ok(())
    })
}

/// Effective `(n_s, n_t)` of squeezing `r`, parasitic gain `gamma` and
/// detection efficiency `eta`.
#[no_mangle]
pub extern "C" fn sd_effective_photons(r: f64, gamma: f64, eta: f64, n_s: *mut f64, n_t: *mut f64) -> SdStatus {
    guard(|| {
        let p = model::effective_photons(&PhysicalParams::new(r, gamma, eta)?)?;
        *out_ref(n_s, "n_s")? = p.n_s();
        *out_ref(n_t, "n_t")? = p.n_t();
        Ok(())
    })
}

/// Discord of a symmetric two-mode covariance matrix with diagonal blocks
/// `a·I` and off-diagonal block `diag(c, -c)`, vacuum variance 1/2.
#[no_mangle]
pub extern "C" fn sd_cm_discord(a: f64, c: f64, out: *mut f64) -> SdStatus {
    guard(|| {
        let cm = model::CovMatrix2Mode::new(a, c, model::VacuumUnit::Half)?;
        *out_ref(out, "out")? = model::cm_discord(&cm)?;
        Ok(())
    })
}

/// Per-shot variance bound on the discord.
#[no_mangle]
pub extern "C" fn sd_crb_discord(r: f64, gamma: f64, eta: f64, kind: SdInfoKind, out: *mut f64) -> SdStatus {
    guard(|| {
        let q = PhysicalParams::new(r, gamma, eta)?;
        let kind = match kind {
            SdInfoKind::Quantum => InfoKind::Quantum,
            SdInfoKind::Classical => InfoKind::Classical,
        };
        *out_ref(out, "out")? = fisher::crb_discord(&q, kind)?.var_bound_per_shot;
        Ok(())
    })
}

/// `10·log10(m·var_d / bound_per_shot)`.
#[no_mangle]
pub extern "C" fn sd_noise_ratio_db(var_d: f64, m: u64, bound_per_shot: f64, out: *mut f64) -> SdStatus {
    guard(|| {
        if !(bound_per_shot > 0.0 && bound_per_shot.is_finite()) {
            return Err(Error::Domain(format!("bound must be positive, got {bound_per_shot}")).into());
        }
        let bound = fisher::CrbResult {
            var_bound_per_shot: bound_per_shot,
            kind: InfoKind::Classical,
            at_params: PhysicalParams::new(0.0, 0.0, 1.0)?,
        };
        *out_ref(out, "out")? = fisher::noise_ratio_db(var_d, m, &bound)?;
        Ok(())
    })
}

fn store(out: *mut *mut SdDataset, ds: HomodyneDataset) -> Result<(), Fail> {
    let slot = out_ref(out, "out")?;
    *slot = Box::into_raw(Box::new(SdDataset(ds)));
    Ok(())
}

/// Simulates `m_q` shots per setting of the STS `(n_s, n_t)`.
#[no_mangle]
pub extern "C" fn sd_dataset_simulate(n_s: f64, n_t: f64, m_q: usize, seed: u64, out: *mut *mut SdDataset) -> SdStatus {
    guard(|| {
        let p = StsParams::new(n_s, n_t)?;
        store(out, homodyne::simulate_dataset(&p, m_q, seed)?)
    })
}

/// Simulates the state produced by `(r, gamma, eta)`.
#[no_mangle]
pub extern "C" fn sd_dataset_simulate_physical(
    r: f64,
    gamma: f64,
    eta: f64,
    m_q: usize,
    seed: u64,
    out: *mut *mut SdDataset,
) -> SdStatus {
    guard(|| {
        let q = PhysicalParams::new(r, gamma, eta)?;
        store(out, homodyne::simulate_physical(&q, m_q, seed)?)
    })
}

/// Reads a dataset CSV and its `.meta.json` sidecar.
#[no_mangle]
pub extern "C" fn sd_dataset_load(path: *const c_char, out: *mut *mut SdDataset) -> SdStatus {
    guard(|| {
        let path = path_arg(path)?;
        store(out, homodyne::load_dataset(path)?)
    })
}

/// Writes a dataset CSV and its `.meta.json` sidecar.
#[no_mangle]
pub extern "C" fn sd_dataset_save(ds: *const SdDataset, path: *const c_char) -> SdStatus {
    guard(|| {
        let ds = dataset_ref(ds)?;
        homodyne::save_dataset(ds, path_arg(path)?)?;
        Ok(())
    })
}

/// Shots per setting, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn sd_dataset_m_q(ds: *const SdDataset) -> usize {
    dataset_ref(ds).map_or(0, HomodyneDataset::m_q)
}

/// Releases a dataset. Null is ignored.
#[no_mangle]
pub extern "C" fn sd_dataset_free(ds: *mut SdDataset) {
    if !ds.is_null() {
        // SAFETY: created by `Box::into_raw` in `store` and freed once.
        drop(unsafe { Box::from_raw(ds) });
    }
}

fn write_estimate(out: *mut SdEstimate, r: stsdiscord::EstimateRecord) -> Result<(), Fail> {
    *out_ref(out, "out")? = SdEstimate {
        d_hat: r.d_hat,
        var_d: r.var_d,
        ns_hat: r.ns_hat,
        nt_hat: r.nt_hat,
        var_ns: r.var_ns,
        var_nt: r.var_nt,
        method: match r.method {
            Method::Inversion => SdMethod::Inversion,
            Method::Bayes => SdMethod::Bayes,
        },
        resources_m: r.resources_m,
    };
    Ok(())
}

/// Inversion estimate with `mc_trials` Monte Carlo draws.
#[no_mangle]
pub extern "C" fn sd_estimate_inversion(
    ds: *const SdDataset,
    mc_trials: u64,
    max_rejection_rate: f64,
    seed: u64,
    out: *mut SdEstimate,
) -> SdStatus {
    guard(|| {
        let cfg = InversionConfig { mc_trials, max_rejection_rate };
        let record = estimation::inversion_estimate(dataset_ref(ds)?, &cfg, seed)?;
        write_estimate(out, record)
    })
}

/// Block-wise Bayesian estimate on a `grid_points`² posterior grid spanning
/// `grid_width_sigma` prior standard deviations.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn sd_estimate_bayes(
    ds: *const SdDataset,
    n_blocks: usize,
    grid_points: usize,
    grid_width_sigma: f64,
    mc_trials: u64,
    max_rejection_rate: f64,
    seed: u64,
    out: *mut SdEstimate,
) -> SdStatus {
    guard(|| {
        let cfg = BayesConfig {
            n_blocks,
            grid: GridSpec { points: grid_points, width_sigma: grid_width_sigma },
            inversion: InversionConfig { mc_trials, max_rejection_rate },
        };
        let record = estimation::bayesian_estimate(dataset_ref(ds)?, &cfg, seed)?;
        write_estimate(out, record)
    })
}
