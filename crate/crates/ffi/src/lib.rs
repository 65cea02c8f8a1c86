//! C interface to `casimir-core`.
//!
//! Geometries and numerical parameters are opaque handles created and freed
//! through this API. Every fallible call returns a [`CasimirStatus`]; the
//! message for the most recent failure on the calling thread is available
//! from [`casimir_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use casimir_core::baselines::{large_alpha_asymptote, pfa_concentric, PfaOrder};
use casimir_core::bessel::{bessel_i, bessel_k, BesselOrder};
use casimir_core::energy::{energy_concentric_accelerated, energy_exact, tilde_energy, EnergyError};
use casimir_core::geometry::{to_physical, EnergyResult, Geometry, QuadratureSpec, TruncationSpec};
use casimir_core::rack_pinion::{force_ratio, CorrugationSpec, ProfileJ};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CasimirStatus {
    Ok = 0,
    InvalidArgument = 1,
    Geometry = 2,
    NoConvergence = 3,
    NonContractive = 4,
    NullPointer = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CasimirPfaOrder {
    Leading = 0,
    NextToLeading = 1,
    NextToNextToLeading = 2,
}

/// Energy in units of `ħcL/(4πa²)` with its diagnostics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CasimirEnergy {
    pub e_hat: f64,
    pub e_tm: f64,
    pub e_te: f64,
    pub est_rel_error: f64,
    pub n_max_final: u32,
    pub m_max_final: u32,
    pub node_count_final: u32,
    /// 1 when `est_rel_error <= rel_tol`.
    pub converged: i32,
}

/// Opaque geometry handle.
pub struct CasimirGeometry(Geometry);

/// Opaque truncation and quadrature settings.
pub struct CasimirParams {
    truncation: TruncationSpec,
    quadrature: QuadratureSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn guard(f: impl FnOnce() -> Result<(), (CasimirStatus, String)>) -> CasimirStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CasimirStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CasimirStatus::Panic
        }
    }
}

fn invalid(msg: impl ToString) -> (CasimirStatus, String) {
    (CasimirStatus::InvalidArgument, msg.to_string())
}

fn null(what: &str) -> (CasimirStatus, String) {
    (CasimirStatus::NullPointer, format!("{what} is null"))
}

fn energy_status(e: &EnergyError) -> CasimirStatus {
    match e {
        EnergyError::Geometry(_) => CasimirStatus::Geometry,
        EnergyError::InvalidArgument(_) => CasimirStatus::InvalidArgument,
        EnergyError::NonContractive(_) => CasimirStatus::NonContractive,
        EnergyError::TruncationInsufficient(_) | EnergyError::NoConvergence { .. } => {
            CasimirStatus::NoConvergence
        }
    }
}

fn to_c(r: &EnergyResult) -> CasimirEnergy {
    CasimirEnergy {
        e_hat: r.e_hat,
        e_tm: r.e_tm,
        e_te: r.e_te,
        est_rel_error: r.est_rel_error,
        n_max_final: r.report.n_max_final as u32,
        m_max_final: r.report.m_max_final as u32,
        node_count_final: r.report.node_count_final as u32,
        converged: r.converged as i32,
    }
}

/// # Safety
/// `out` must be null or valid for writes.
unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), (CasimirStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn new_geometry(g: Geometry, out: *mut *mut CasimirGeometry) -> CasimirStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        g.validate()
            .map_err(|e| (CasimirStatus::Geometry, e.to_string()))?;
        out.write(Box::into_raw(Box::new(CasimirGeometry(g))));
        Ok(())
    })
}

/// Coaxial cylinders with radius ratio `alpha = b/a`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_geometry_concentric(
    alpha: f64,
    out: *mut *mut CasimirGeometry,
) -> CasimirStatus {
    new_geometry(Geometry::Concentric { alpha }, out)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_geometry_eccentric(
    alpha: f64,
    delta: f64,
    out: *mut *mut CasimirGeometry,
) -> CasimirStatus {
    new_geometry(Geometry::Eccentric { alpha, delta }, out)
}

/// Cylinder whose axis lies `h_over_a` radii from a plane.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_geometry_cylinder_plane(
    h_over_a: f64,
    out: *mut *mut CasimirGeometry,
) -> CasimirStatus {
    new_geometry(Geometry::CylinderPlane { h_over_a }, out)
}

/// # Safety
/// `g` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn casimir_geometry_free(g: *mut CasimirGeometry) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Smallest surface separation in units of `a`.
///
/// # Safety
/// `g` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_geometry_min_gap(
    g: *const CasimirGeometry,
    out: *mut f64,
) -> CasimirStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("geometry"))?;
        write_out(out, g.0.min_gap())
    })
}

/// Default settings: adaptive truncation from `n_max = 16`, `rel_tol = 1e-4`,
/// 128 transformed-Gauss nodes.
#[no_mangle]
pub extern "C" fn casimir_params_new() -> *mut CasimirParams {
    Box::into_raw(Box::new(CasimirParams {
        truncation: TruncationSpec::default(),
        quadrature: QuadratureSpec::default(),
    }))
}

/// # Safety
/// `p` must be null or a handle from [`casimir_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn casimir_params_free(p: *mut CasimirParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn update(
    p: *mut CasimirParams,
    f: impl FnOnce(&mut CasimirParams) -> Result<(), String>,
) -> CasimirStatus {
    guard(|| {
        let p = p.as_mut().ok_or_else(|| null("params"))?;
        let mut next = CasimirParams {
            truncation: p.truncation,
            quadrature: p.quadrature,
        };
        f(&mut next).map_err(invalid)?;
        next.truncation.check().map_err(invalid)?;
        next.quadrature.check().map_err(invalid)?;
        *p = next;
        Ok(())
    })
}

/// # Safety
/// `p` must be a live params handle.
#[no_mangle]
pub unsafe extern "C" fn casimir_params_set_rel_tol(p: *mut CasimirParams, rel_tol: f64) -> CasimirStatus {
    update(p, |p| {
        p.truncation.rel_tol = rel_tol;
        Ok(())
    })
}

/// Starting angular truncation (exact truncation when adaptivity is off).
///
/// # Safety
/// `p` must be a live params handle.
#[no_mangle]
pub unsafe extern "C" fn casimir_params_set_n_max(p: *mut CasimirParams, n_max: u32) -> CasimirStatus {
    update(p, |p| {
        p.truncation.n_max = n_max as usize;
        p.truncation.m_max = p.truncation.m_max.max(n_max as usize);
        Ok(())
    })
}

/// # Safety
/// `p` must be a live params handle.
#[no_mangle]
pub unsafe extern "C" fn casimir_params_set_nodes(p: *mut CasimirParams, nodes: u32) -> CasimirStatus {
    update(p, |p| {
        p.quadrature.node_count = nodes as usize;
        Ok(())
    })
}

/// Nonzero enables refinement of truncation and node count.
///
/// # Safety
/// `p` must be a live params handle.
#[no_mangle]
pub unsafe extern "C" fn casimir_params_set_adapt(p: *mut CasimirParams, adapt: i32) -> CasimirStatus {
    update(p, |p| {
        p.truncation.adapt = adapt != 0;
        Ok(())
    })
}

unsafe fn run_energy(
    g: *const CasimirGeometry,
    p: *const CasimirParams,
    out: *mut CasimirEnergy,
    f: fn(&Geometry, &TruncationSpec, &QuadratureSpec) -> Result<EnergyResult, EnergyError>,
) -> CasimirStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("geometry"))?;
        let p = p.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        match f(&g.0, &p.truncation, &p.quadrature) {
            Ok(r) => {
                out.write(to_c(&r));
                Ok(())
            }
            Err(e) => {
                if let Some(partial) = e.partial() {
                    out.write(to_c(partial));
                }
                Err((energy_status(&e), e.to_string()))
            }
        }
    })
}

/// Exact energy of any geometry. On `NO_CONVERGENCE` the partially
/// converged estimate is still written to `out` when one exists.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_energy_exact(
    g: *const CasimirGeometry,
    p: *const CasimirParams,
    out: *mut CasimirEnergy,
) -> CasimirStatus {
    run_energy(g, p, out, energy_exact)
}

/// Subtraction-accelerated energy; concentric geometries only.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_energy_accelerated(
    g: *const CasimirGeometry,
    p: *const CasimirParams,
    out: *mut CasimirEnergy,
) -> CasimirStatus {
    run_energy(g, p, out, energy_concentric_accelerated)
}

/// Proximity-force energy of coaxial cylinders at the given order
/// (a `CasimirPfaOrder` value).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_pfa_concentric(alpha: f64, order: u32, out: *mut f64) -> CasimirStatus {
    guard(|| {
        let order = match order {
            0 => PfaOrder::Leading,
            1 => PfaOrder::NextToLeading,
            2 => PfaOrder::NextToNextToLeading,
            _ => return Err(invalid(format!("unknown order {order}"))),
        };
        let v = pfa_concentric(alpha, order).map_err(invalid)?;
        write_out(out, v)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_large_alpha_asymptote(alpha: f64, out: *mut f64) -> CasimirStatus {
    guard(|| write_out(out, large_alpha_asymptote(alpha).map_err(invalid)?))
}

/// Closed-form subtracted energy used by the accelerated evaluator.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_tilde_energy(alpha: f64, out: *mut f64) -> CasimirStatus {
    guard(|| write_out(out, tilde_energy(alpha).map_err(invalid)?))
}

/// Joules from a dimensionless energy, inner radius `a` and length `l` in
/// meters.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_to_physical(e_hat: f64, a: f64, l: f64, out: *mut f64) -> CasimirStatus {
    guard(|| {
        let v = to_physical(e_hat, a, l).map_err(|e| (CasimirStatus::Geometry, e.to_string()))?;
        write_out(out, v)
    })
}

/// `I_n(x)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_bessel_i(n: i32, x: f64, out: *mut f64) -> CasimirStatus {
    guard(|| {
        let o = BesselOrder::new(n).map_err(invalid)?;
        write_out(out, bessel_i(o, x).map_err(invalid)?)
    })
}

/// `K_n(x)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_bessel_k(n: i32, x: f64, out: *mut f64) -> CasimirStatus {
    guard(|| {
        let o = BesselOrder::new(n).map_err(invalid)?;
        write_out(out, bessel_k(o, x).map_err(invalid)?)
    })
}

/// Cylindrical to plane rack-and-pinion force ratio with a constant
/// profile, for gap `d` and pinion radius `a`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn casimir_force_ratio(d: f64, a: f64, out: *mut f64) -> CasimirStatus {
    guard(|| {
        // amplitude, wavelength and length cancel in the ratio
        let c = CorrugationSpec {
            h: 0.1 * d,
            lambda: 10.0 * d,
            x: 0.0,
            d,
            a,
            l: 1.0,
        };
        let v = force_ratio(&c, &ProfileJ::default(), &QuadratureSpec::default()).map_err(invalid)?;
        write_out(out, v)
    })
}

/// Message for the last failed call on this thread; empty after a
/// successful call. Valid until the next call into this library from the
/// same thread.
#[no_mangle]
pub extern "C" fn casimir_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn casimir_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    fn message() -> String {
        unsafe { CStr::from_ptr(casimir_last_error_message()) }
            .to_string_lossy()
            .into_owned()
    }

    #[test]
    fn panics_become_status() {
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let s = guard(|| panic!("boom"));
        std::panic::set_hook(prev);
        assert_eq!(s, CasimirStatus::Panic);
        assert_eq!(message(), "internal panic");
    }

    #[test]
    fn interior_nul_is_replaced() {
        set_error("a\0b");
        assert_eq!(message(), "a b");
    }
}
