//! C ABI for `opx`.
//!
//! Every fallible function returns an [`OpxStatus`]; on anything but `OPX_OK` the
//! message is available from [`opx_last_error`] on the same thread. Handles are
//! opaque, created by `*_new`/`*_solve`/`*_build` and released with the matching
//! `*_free`. Passing NULL to a free function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use opx::equilibrium::{EquilibriumMeasure, DEFAULT_QUAD_ORDER};
use opx::field::ExternalField;
use opx::oracle::{build_table, eval_poly, log_kappa_sq, RecurrenceTable};
use opx::statphase::{i_direct, PhaseFunction};
use opx::{Error, C64};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    UnknownField = 3,
    Validation = 4,
    Domain = 5,
    Branch = 6,
    NoConvergence = 7,
    Resolution = 8,
    Condition = 9,
    Io = 10,
    Panic = 11,
}

/// Equilibrium measure of a catalogue field.
pub struct OpxEquilibrium(EquilibriumMeasure);

/// Three-term recurrence coefficients for e^{-N V}.
pub struct OpxRecurrence(RecurrenceTable);

/// Phase function on [-1, 1] for the stationary-phase integrals.
pub struct OpxPhase(PhaseFunction);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> OpxStatus {
    match e {
        Error::Catalog(_) => OpxStatus::UnknownField,
        Error::Validation(_) => OpxStatus::Validation,
        Error::Domain(_) => OpxStatus::Domain,
        Error::Branch(_) => OpxStatus::Branch,
        Error::Convergence(_) => OpxStatus::NoConvergence,
        Error::Resolution(_) => OpxStatus::Resolution,
        Error::Condition(_) => OpxStatus::Condition,
        Error::Io(_) => OpxStatus::Io,
    }
}

struct Fail(OpxStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OpxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OpxStatus::Ok
        }
        Ok(Err(Fail(s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            OpxStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(OpxStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(OpxStatus::InvalidString, "string is not UTF-8".into()))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

/// Message for the last failing call on this thread ("" after a success).
/// Valid until the next opx call on the same thread.
#[no_mangle]
pub extern "C" fn opx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn opx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from an opx function that documents ownership transfer, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn opx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Solves for the equilibrium measure of `field_id` (e.g. "gue", "c2lip(0,1)").
/// `quad_order` 0 selects the default.
///
/// # Safety
/// `field_id` must be a NUL-terminated string, `out_handle` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opx_equilibrium_solve(
    field_id: *const c_char,
    c: f64,
    quad_order: usize,
    out_handle: *mut *mut OpxEquilibrium,
) -> OpxStatus {
    guard(|| {
        let o = out(out_handle)?;
        *o = ptr::null_mut();
        let f = ExternalField::builtin(str_arg(field_id)?)?;
        let q = if quad_order == 0 { DEFAULT_QUAD_ORDER } else { quad_order };
        let eq = EquilibriumMeasure::solve(&f, c, q)?;
        *o = Box::into_raw(Box::new(OpxEquilibrium(eq)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`opx_equilibrium_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opx_equilibrium_free(h: *mut OpxEquilibrium) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Support endpoints and the Lagrange constant.
///
/// # Safety
/// Valid handle and output pointers.
#[no_mangle]
pub unsafe extern "C" fn opx_equilibrium_constants(
    h: *const OpxEquilibrium,
    alpha: *mut f64,
    beta: *mut f64,
    ell: *mut f64,
) -> OpxStatus {
    guard(|| {
        let eq = &handle(h)?.0;
        let (a, b, l) = (out(alpha)?, out(beta)?, out(ell)?);
        *a = eq.alpha();
        *b = eq.beta();
        *l = eq.ell();
        Ok(())
    })
}

/// Density ψ(x), x in [alpha, beta].
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn opx_equilibrium_psi(h: *const OpxEquilibrium, x: f64, value: *mut f64) -> OpxStatus {
    guard(|| {
        *out(value)? = handle(h)?.0.psi(x)?;
        Ok(())
    })
}

/// θ(x) = 2π∫ₓ^β ψ, x in [alpha, beta].
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn opx_equilibrium_theta(h: *const OpxEquilibrium, x: f64, value: *mut f64) -> OpxStatus {
    guard(|| {
        *out(value)? = handle(h)?.0.theta(x)?;
        Ok(())
    })
}

/// Effective potential φ(x), x outside (alpha, beta).
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn opx_equilibrium_phi(h: *const OpxEquilibrium, x: f64, value: *mut f64) -> OpxStatus {
    guard(|| {
        *out(value)? = handle(h)?.0.phi(x)?;
        Ok(())
    })
}

/// JSON summary (endpoints, ℓ, condition report). Free the string with [`opx_string_free`].
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn opx_equilibrium_summary_json(h: *const OpxEquilibrium, json: *mut *mut c_char) -> OpxStatus {
    guard(|| {
        let o = out(json)?;
        *o = ptr::null_mut();
        let eq = &handle(h)?.0;
        let mut v = serde_json::to_value(eq.summary()).expect("serialisable");
        v["condition_report"] = serde_json::to_value(eq.verify_conditions()).expect("serialisable");
        *o = CString::new(v.to_string()).expect("no NUL in JSON").into_raw();
        Ok(())
    })
}

/// Recurrence coefficients a_0..a_{n_max-1}, b_1..b_{n_max} for e^{-N V}.
///
/// # Safety
/// `field_id` NUL-terminated, `out_handle` valid.
#[no_mangle]
pub unsafe extern "C" fn opx_recurrence_build(
    field_id: *const c_char,
    big_n: usize,
    n_max: usize,
    out_handle: *mut *mut OpxRecurrence,
) -> OpxStatus {
    guard(|| {
        let o = out(out_handle)?;
        *o = ptr::null_mut();
        let f = ExternalField::builtin(str_arg(field_id)?)?;
        let t = build_table(&f, big_n, n_max)?;
        *o = Box::into_raw(Box::new(OpxRecurrence(t)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`opx_recurrence_build`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opx_recurrence_free(h: *mut OpxRecurrence) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of coefficient pairs held.
///
/// # Safety
/// Valid handle.
#[no_mangle]
pub unsafe extern "C" fn opx_recurrence_len(h: *const OpxRecurrence) -> usize {
    h.as_ref().map_or(0, |t| t.0.n_max)
}

/// a_k and b_{k+1} for k < n_max.
///
/// # Safety
/// Valid handle and output pointers.
#[no_mangle]
pub unsafe extern "C" fn opx_recurrence_coefficients(
    h: *const OpxRecurrence,
    k: usize,
    a_k: *mut f64,
    b_k1: *mut f64,
) -> OpxStatus {
    guard(|| {
        let t = &handle(h)?.0;
        let (a, b) = (out(a_k)?, out(b_k1)?);
        if k >= t.n_max {
            return Err(Fail(OpxStatus::Validation, format!("k = {k} out of range (n_max = {})", t.n_max)));
        }
        *a = t.a[k];
        *b = t.b[k];
        Ok(())
    })
}

/// log κ_n² of the orthonormal polynomial p_n, n <= n_max.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn opx_recurrence_log_kappa_sq(h: *const OpxRecurrence, n: usize, value: *mut f64) -> OpxStatus {
    guard(|| {
        let t = &handle(h)?.0;
        let v = out(value)?;
        if n > t.n_max {
            return Err(Fail(OpxStatus::Validation, format!("n = {n} exceeds n_max = {}", t.n_max)));
        }
        *v = log_kappa_sq(t, n);
        Ok(())
    })
}

/// p_n(z) = (re + i im)·e^{log_scale}.
///
/// # Safety
/// Valid handle and output pointers.
#[no_mangle]
pub unsafe extern "C" fn opx_recurrence_eval(
    h: *const OpxRecurrence,
    n: usize,
    z_re: f64,
    z_im: f64,
    re: *mut f64,
    im: *mut f64,
    log_scale: *mut f64,
) -> OpxStatus {
    guard(|| {
        let t = &handle(h)?.0;
        let (r, i, s) = (out(re)?, out(im)?, out(log_scale)?);
        let e = eval_poly(t, n, C64::new(z_re, z_im))?;
        *r = e.p.re;
        *i = e.p.im;
        *s = e.log_scale;
        Ok(())
    })
}

/// Built-in phase: "quad" or "cubic".
///
/// # Safety
/// `name` NUL-terminated, `out_handle` valid.
#[no_mangle]
pub unsafe extern "C" fn opx_phase_new(name: *const c_char, out_handle: *mut *mut OpxPhase) -> OpxStatus {
    guard(|| {
        let o = out(out_handle)?;
        *o = ptr::null_mut();
        let ph = PhaseFunction::by_name(str_arg(name)?)?;
        *o = Box::into_raw(Box::new(OpxPhase(ph)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`opx_phase_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn opx_phase_free(h: *mut OpxPhase) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// ∫₋₁¹ e^{inθ(x)} dx.
///
/// # Safety
/// Valid handle and output pointers.
#[no_mangle]
pub unsafe extern "C" fn opx_phase_integral(h: *const OpxPhase, n: f64, re: *mut f64, im: *mut f64) -> OpxStatus {
    guard(|| {
        let ph = &handle(h)?.0;
        let (r, i) = (out(re)?, out(im)?);
        let v = i_direct(ph, n)?;
        *r = v.re;
        *i = v.im;
        Ok(())
    })
}
