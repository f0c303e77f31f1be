//! C ABI over the fracpde solvers.
//!
//! Every fallible call returns a [`FracpdeStatus`]; on failure the message is
//! available from [`fracpde_last_error`] on the same thread. Handles are
//! opaque and must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fracpde::fp::{Drift, DriftProfile};
use fracpde::gl::{run_global, GlConfig, Nonlinearity};
use fracpde::gronwall::{uniform_gronwall_check, TrajectoryTriple};
use fracpde::mc::{simulate_killed, StableSimConfig};
use fracpde::nonlocal::{fractional_constant, NonlocalOperator};
use fracpde::spectral::{eigendecompose, EigenDecomposition};
use fracpde::Error;
use nalgebra::DVector;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FracpdeStatus {
    Ok = 0,
    /// Null pointer or length mismatch at the boundary.
    InvalidArgument = 1,
    /// Rejected parameters or input data.
    InputError = 2,
    /// Solver failure: blow-up, loss of contraction, factorisation failure.
    NumericalError = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FracpdeNonlinearity {
    Zero = 0,
    /// `u - u^3`
    Cubic = 1,
    /// `u + u^2 - u^3`
    CubicQuadratic = 2,
}

/// Discrete operator on `n` interior nodes of (0,1).
pub struct FracpdeOperator(NonlocalOperator);

/// Eigendecomposition of `-A`.
pub struct FracpdeSpectrum(EigenDecomposition);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Arg(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> FracpdeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FracpdeStatus::Ok,
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg.to_string());
            FracpdeStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            let status = if e.exit_code() == 3 {
                FracpdeStatus::NumericalError
            } else {
                FracpdeStatus::InputError
            };
            set_error(e.to_string());
            status
        }
        Err(_) => {
            set_error("panic inside fracpde".into());
            FracpdeStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Arg("null input array"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Arg("null output array"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Arg("null output pointer"))
}

fn check_len(expected: usize, got: usize) -> Result<(), Failure> {
    if expected != got {
        return Err(Failure::Arg("array length does not match the grid"));
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next fracpde call on the same thread.
#[no_mangle]
pub extern "C" fn fracpde_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Normalisation constant of the fractional Laplacian; NaN outside (0, 2).
#[no_mangle]
pub extern "C" fn fracpde_fractional_constant(alpha: f64) -> f64 {
    if alpha > 0.0 && alpha < 2.0 {
        fractional_constant(alpha)
    } else {
        f64::NAN
    }
}

/// # Safety
/// `out_op` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn fracpde_operator_new(
    alpha: f64,
    n: usize,
    out_op: *mut *mut FracpdeOperator,
) -> FracpdeStatus {
    guard(|| {
        let slot = out(out_op)?;
        *slot = ptr::null_mut();
        let op = NonlocalOperator::new(alpha, n)?;
        *slot = Box::into_raw(Box::new(FracpdeOperator(op)));
        Ok(())
    })
}

/// # Safety
/// `op` must come from [`fracpde_operator_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fracpde_operator_free(op: *mut FracpdeOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of grid nodes, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracpde_operator_size(op: *const FracpdeOperator) -> usize {
    op.as_ref().map_or(0, |o| o.0.n())
}

/// `out = A u`.
///
/// # Safety
/// `u` and `out_values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fracpde_operator_apply(
    op: *const FracpdeOperator,
    u: *const f64,
    len: usize,
    out_values: *mut f64,
) -> FracpdeStatus {
    guard(|| {
        let op = &op.as_ref().ok_or(Failure::Arg("null operator"))?.0;
        check_len(op.n(), len)?;
        let u = DVector::from_column_slice(slice(u, len)?);
        let au = op.apply(&u)?;
        slice_mut(out_values, len)?.copy_from_slice(au.as_slice());
        Ok(())
    })
}

/// Nonlocal Dirichlet form `-<A u, u>` through the two-point gradient.
///
/// # Safety
/// `u` must hold `len` doubles; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracpde_operator_dirichlet_form(
    op: *const FracpdeOperator,
    u: *const f64,
    len: usize,
    out_value: *mut f64,
) -> FracpdeStatus {
    guard(|| {
        let op = &op.as_ref().ok_or(Failure::Arg("null operator"))?.0;
        check_len(op.n(), len)?;
        let u = DVector::from_column_slice(slice(u, len)?);
        *out(out_value)? = op.dirichlet_form(&u)?;
        Ok(())
    })
}

/// # Safety
/// `op` must be a live handle and `out_spectrum` writable.
#[no_mangle]
pub unsafe extern "C" fn fracpde_spectrum_new(
    op: *const FracpdeOperator,
    out_spectrum: *mut *mut FracpdeSpectrum,
) -> FracpdeStatus {
    guard(|| {
        let slot = out(out_spectrum)?;
        *slot = ptr::null_mut();
        let op = &op.as_ref().ok_or(Failure::Arg("null operator"))?.0;
        *slot = Box::into_raw(Box::new(FracpdeSpectrum(eigendecompose(op)?)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`fracpde_spectrum_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fracpde_spectrum_free(s: *mut FracpdeSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Ascending eigenvalues of `-A`.
///
/// # Safety
/// `out_values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fracpde_spectrum_eigenvalues(
    s: *const FracpdeSpectrum,
    out_values: *mut f64,
    len: usize,
) -> FracpdeStatus {
    guard(|| {
        let s = &s.as_ref().ok_or(Failure::Arg("null spectrum"))?.0;
        check_len(s.n(), len)?;
        slice_mut(out_values, len)?.copy_from_slice(s.eigenvalues().as_slice());
        Ok(())
    })
}

/// `out = exp(t A) u`.
///
/// # Safety
/// `u` and `out_values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fracpde_spectrum_heat_apply(
    s: *const FracpdeSpectrum,
    t: f64,
    u: *const f64,
    len: usize,
    out_values: *mut f64,
) -> FracpdeStatus {
    guard(|| {
        let s = &s.as_ref().ok_or(Failure::Arg("null spectrum"))?.0;
        check_len(s.n(), len)?;
        let u = DVector::from_column_slice(slice(u, len)?);
        let v = s.heat_apply(t, &u)?;
        slice_mut(out_values, len)?.copy_from_slice(v.as_slice());
        Ok(())
    })
}

/// Ginzburg-Landau run `u_t = A u + F(u)` to `t_final`. Writes the final
/// field and its squared L2 norm.
///
/// # Safety
/// `u0` and `out_final` must hold `len` doubles; `out_l2_sq` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracpde_gl_run(
    s: *const FracpdeSpectrum,
    nonlinearity: FracpdeNonlinearity,
    u0: *const f64,
    len: usize,
    t_final: f64,
    dt: f64,
    out_final: *mut f64,
    out_l2_sq: *mut f64,
) -> FracpdeStatus {
    guard(|| {
        let s = &s.as_ref().ok_or(Failure::Arg("null spectrum"))?.0;
        check_len(s.n(), len)?;
        let u0 = DVector::from_column_slice(slice(u0, len)?);
        let nl = match nonlinearity {
            FracpdeNonlinearity::Zero => Nonlinearity::Zero,
            FracpdeNonlinearity::Cubic => Nonlinearity::Cubic,
            FracpdeNonlinearity::CubicQuadratic => Nonlinearity::CubicQuadratic,
        };
        let cfg = GlConfig {
            t_final,
            dt,
            ..GlConfig::default()
        };
        let run = run_global(&u0, &nl, &cfg, s)?;
        let last = run.trace.records.last().ok_or(Failure::Arg("empty run"))?;
        slice_mut(out_final, len)?.copy_from_slice(run.final_field.values.as_slice());
        *out(out_l2_sq)? = last.l2_sq;
        Ok(())
    })
}

/// Uniform Gronwall check of sampled `y, g, h` on the time grid `t` with
/// window `r`. Writes the bound and whether every window satisfied it.
///
/// # Safety
/// `t`, `y`, `g`, `h` must hold `len` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracpde_uniform_gronwall(
    t: *const f64,
    y: *const f64,
    g: *const f64,
    h: *const f64,
    len: usize,
    r: f64,
    out_bound: *mut f64,
    out_pass: *mut bool,
) -> FracpdeStatus {
    guard(|| {
        let triple = TrajectoryTriple::new(
            slice(t, len)?.to_vec(),
            slice(y, len)?.to_vec(),
            slice(g, len)?.to_vec(),
            slice(h, len)?.to_vec(),
            r,
        )?;
        let rep = uniform_gronwall_check(&triple)?;
        *out(out_bound)? = rep.bound;
        *out(out_pass)? = rep.pass;
        Ok(())
    })
}

/// Survival fraction at `t_final` of alpha-stable paths killed on leaving
/// (0,1), with drift `drift_amplitude * sin(2 pi x)` and initial positions
/// drawn from the nodal density `u0`.
///
/// # Safety
/// `u0` must hold `len` doubles; `out_survival` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracpde_mc_survival(
    alpha: f64,
    drift_amplitude: f64,
    u0: *const f64,
    len: usize,
    n_paths: usize,
    dt: f64,
    t_final: f64,
    seed: u64,
    out_survival: *mut f64,
) -> FracpdeStatus {
    guard(|| {
        let grid = fracpde::nonlocal::Grid1D::new(len)?;
        let density = DVector::from_column_slice(slice(u0, len)?);
        let drift = Drift::from_profile(
            grid,
            &DriftProfile::Sine {
                amplitude: drift_amplitude,
                frequency: 1.0,
            },
        )?;
        let cfg = StableSimConfig {
            alpha,
            drift,
            n_paths,
            dt,
            t_final,
            seed,
            bins: 16,
        };
        *out(out_survival)? = simulate_killed(&cfg, grid, &density)?.survival_fraction;
        Ok(())
    })
}
