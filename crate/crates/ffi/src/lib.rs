//! C ABI over the fraclap solver.
//!
//! Every function returns a [`FraclapStatus`]. On failure a description is
//! kept per thread and can be read with [`fraclap_last_error_message`].
//! Trajectories are opaque handles owned by the caller and released with
//! [`fraclap_trajectory_free`]. Spectral fields cross the boundary as plain
//! arrays of cosine coefficients `c_0..c_{N-1}`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fraclap::evolution::{run, run_bertozzi_pugh, Trajectory};
use fraclap::halflap::{apply_i, inverse_i, seminorm, Order};
use fraclap::{Error, MobilityKind, ModelParams, SpectralField, StepReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FraclapStatus {
    Ok = 0,
    /// Invalid parameters or arguments.
    Usage = 1,
    /// A solve failed or the data left the admissible domain.
    Numeric = 2,
    Io = 3,
    NullPointer = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FraclapMobility {
    PowerEps = 0,
    BertozziPugh = 1,
    Constant = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FraclapParams {
    pub n: f64,
    pub eps: f64,
    pub delta: f64,
    pub tau: f64,
    pub modes: usize,
    pub nodes: usize,
    pub horizon: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub mobility: FraclapMobility,
    pub stride: usize,
    pub track_entropy: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FraclapStepReport {
    pub t: f64,
    pub mass: f64,
    pub energy_half: f64,
    pub dissipation_cum: f64,
    pub entropy: f64,
    pub h32_cum: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub newton_iters: usize,
    pub flux_l1: f64,
    pub halvings: u32,
    pub clamped: bool,
}

/// Opaque run result.
pub struct FraclapTrajectory {
    inner: Trajectory,
}

impl From<&ModelParams> for FraclapParams {
    fn from(p: &ModelParams) -> Self {
        FraclapParams {
            n: p.n,
            eps: p.eps,
            delta: p.delta,
            tau: p.tau,
            modes: p.modes,
            nodes: p.nodes,
            horizon: p.horizon,
            newton_tol: p.newton_tol,
            newton_max_iter: p.newton_max_iter,
            mobility: match p.mobility {
                MobilityKind::PowerEps => FraclapMobility::PowerEps,
                MobilityKind::BertozziPugh => FraclapMobility::BertozziPugh,
                MobilityKind::Constant => FraclapMobility::Constant,
            },
            stride: p.stride,
            track_entropy: p.track_entropy,
        }
    }
}

impl From<&FraclapParams> for ModelParams {
    fn from(p: &FraclapParams) -> Self {
        ModelParams {
            n: p.n,
            eps: p.eps,
            delta: p.delta,
            tau: p.tau,
            modes: p.modes,
            nodes: p.nodes,
            horizon: p.horizon,
            newton_tol: p.newton_tol,
            newton_max_iter: p.newton_max_iter,
            mobility: match p.mobility {
                FraclapMobility::PowerEps => MobilityKind::PowerEps,
                FraclapMobility::BertozziPugh => MobilityKind::BertozziPugh,
                FraclapMobility::Constant => MobilityKind::Constant,
            },
            stride: p.stride,
            track_entropy: p.track_entropy,
        }
    }
}

impl From<&StepReport> for FraclapStepReport {
    fn from(r: &StepReport) -> Self {
        FraclapStepReport {
            t: r.t,
            mass: r.mass,
            energy_half: r.energy_half,
            dissipation_cum: r.dissipation_cum,
            entropy: r.entropy,
            h32_cum: r.h32_cum,
            min_u: r.min_u,
            max_u: r.max_u,
            newton_iters: r.newton_iters,
            flux_l1: r.flux_l1,
            halvings: r.halvings,
            clamped: r.clamped,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> FraclapStatus {
    match err.exit_code() {
        1 => FraclapStatus::Usage,
        3 => FraclapStatus::Io,
        _ => FraclapStatus::Numeric,
    }
}

fn fail(err: Error) -> FraclapStatus {
    set_last_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> FraclapStatus {
    set_last_error(format!("{what} is null"));
    FraclapStatus::NullPointer
}

/// Clears the error slot, runs `f`, and converts panics into a status.
fn guarded(f: impl FnOnce() -> FraclapStatus) -> FraclapStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            FraclapStatus::Panic
        }
    }
}

unsafe fn field_from_raw(coeffs: *const f64, len: usize) -> Result<SpectralField, FraclapStatus> {
    if coeffs.is_null() {
        return Err(null("coefficient array"));
    }
    if len == 0 {
        return Err(fail(Error::Config("coefficient array is empty".into())));
    }
    let slice = std::slice::from_raw_parts(coeffs, len);
    SpectralField::new(slice.to_vec()).map_err(|e| {
        set_last_error(e.to_string());
        FraclapStatus::Usage
    })
}

unsafe fn write_field(field: &SpectralField, out: *mut f64, len: usize) -> FraclapStatus {
    if out.is_null() {
        return null("output array");
    }
    let c = field.coeffs();
    if len < c.len() {
        return fail(Error::Config(format!(
            "output array holds {len} values, {} needed",
            c.len()
        )));
    }
    std::slice::from_raw_parts_mut(out, c.len()).copy_from_slice(c);
    FraclapStatus::Ok
}

/// Message for the last failing call on this thread, or null if it succeeded.
/// The pointer stays valid until the next fraclap call on the same thread.
#[no_mangle]
pub extern "C" fn fraclap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Fills `out` with the default parameters.
///
/// # Safety
/// `out` must be null or point to writable memory for one `FraclapParams`.
#[no_mangle]
pub unsafe extern "C" fn fraclap_params_default(out: *mut FraclapParams) -> FraclapStatus {
    guarded(|| {
        if out.is_null() {
            return null("out");
        }
        out.write(FraclapParams::from(&ModelParams::default()));
        FraclapStatus::Ok
    })
}

/// Evolves `u0` (length `len`, resized to `params.modes`). With the
/// Bertozzi–Pugh mobility the data is lifted by δ first.
///
/// On success `*out` receives a new handle. If the run stops early the
/// handle holds the partial trajectory and the status describes the cause;
/// either way the caller frees it.
///
/// # Safety
/// `params` must point to a valid `FraclapParams`, `u0` to `len` doubles and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fraclap_run(
    params: *const FraclapParams,
    u0: *const f64,
    len: usize,
    out: *mut *mut FraclapTrajectory,
) -> FraclapStatus {
    guarded(|| {
        if params.is_null() {
            return null("params");
        }
        if out.is_null() {
            return null("out");
        }
        out.write(ptr::null_mut());
        let p = ModelParams::from(&*params);
        if let Err(e) = p.validate() {
            return fail(e);
        }
        let u0 = match field_from_raw(u0, len) {
            Ok(f) => f.resized(p.modes),
            Err(s) => return s,
        };
        let result = if p.mobility == MobilityKind::BertozziPugh {
            run_bertozzi_pugh(&p, &u0)
        } else {
            run(&p, &u0)
        };
        let (traj, status) = match result {
            Ok(t) => (t, FraclapStatus::Ok),
            Err(aborted) => {
                let status = fail(aborted.cause);
                (aborted.partial, status)
            }
        };
        out.write(Box::into_raw(Box::new(FraclapTrajectory { inner: traj })));
        status
    })
}

/// Releases a trajectory. Null is ignored.
///
/// # Safety
/// `traj` must be null or a handle from `fraclap_run` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fraclap_trajectory_free(traj: *mut FraclapTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of accepted steps.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_trajectory_steps(
    traj: *const FraclapTrajectory,
    out: *mut usize,
) -> FraclapStatus {
    guarded(|| match (traj.as_ref(), out.is_null()) {
        (None, _) => null("trajectory"),
        (_, true) => null("out"),
        (Some(t), false) => {
            out.write(t.inner.steps());
            FraclapStatus::Ok
        }
    })
}

/// Number of cosine modes in the final state.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_trajectory_modes(
    traj: *const FraclapTrajectory,
    out: *mut usize,
) -> FraclapStatus {
    guarded(|| match (traj.as_ref(), out.is_null()) {
        (None, _) => null("trajectory"),
        (_, true) => null("out"),
        (Some(t), false) => {
            out.write(t.inner.final_state.modes());
            FraclapStatus::Ok
        }
    })
}

/// Diagnostics of the initial state.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_trajectory_initial(
    traj: *const FraclapTrajectory,
    out: *mut FraclapStepReport,
) -> FraclapStatus {
    guarded(|| match (traj.as_ref(), out.is_null()) {
        (None, _) => null("trajectory"),
        (_, true) => null("out"),
        (Some(t), false) => {
            out.write((&t.inner.initial).into());
            FraclapStatus::Ok
        }
    })
}

/// Diagnostics after step `index` (0-based).
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_trajectory_report(
    traj: *const FraclapTrajectory,
    index: usize,
    out: *mut FraclapStepReport,
) -> FraclapStatus {
    guarded(|| match (traj.as_ref(), out.is_null()) {
        (None, _) => null("trajectory"),
        (_, true) => null("out"),
        (Some(t), false) => match t.inner.reports.get(index) {
            Some(r) => {
                out.write(r.into());
                FraclapStatus::Ok
            }
            None => fail(Error::Config(format!(
                "step index {index} out of range ({} steps)",
                t.inner.steps()
            ))),
        },
    })
}

/// Copies the final state's coefficients into `out` (capacity `len`).
///
/// # Safety
/// `traj` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fraclap_trajectory_final_state(
    traj: *const FraclapTrajectory,
    out: *mut f64,
    len: usize,
) -> FraclapStatus {
    guarded(|| match traj.as_ref() {
        None => null("trajectory"),
        Some(t) => write_field(&t.inner.final_state, out, len),
    })
}

/// I(u) coefficient-wise: out_k = −kπ c_k. `out` needs `len` slots.
///
/// # Safety
/// `coeffs` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fraclap_apply_i(coeffs: *const f64, len: usize, out: *mut f64) -> FraclapStatus {
    guarded(|| match field_from_raw(coeffs, len) {
        Ok(u) => write_field(&apply_i(&u), out, len),
        Err(s) => s,
    })
}

/// Zero-mean solution of −I(u) = g; fails with `NUMERIC` when g has nonzero mean.
///
/// # Safety
/// `coeffs` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fraclap_inverse_i(coeffs: *const f64, len: usize, out: *mut f64) -> FraclapStatus {
    guarded(|| match field_from_raw(coeffs, len) {
        Ok(g) => match inverse_i(&g) {
            Ok(u) => write_field(&u, out, len),
            Err(e) => fail(e),
        },
        Err(s) => s,
    })
}

/// Squared semi-norm Σ_{k≥1} c_k² (kπ)^{2s} for s ∈ {0.5, 1, 1.5, 2}.
///
/// # Safety
/// `coeffs` must hold `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_seminorm(
    coeffs: *const f64,
    len: usize,
    order: f64,
    out: *mut f64,
) -> FraclapStatus {
    guarded(|| {
        if out.is_null() {
            return null("out");
        }
        let u = match field_from_raw(coeffs, len) {
            Ok(u) => u,
            Err(s) => return s,
        };
        match Order::from_f64(order) {
            Ok(s) => {
                out.write(seminorm(&u, s));
                FraclapStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
