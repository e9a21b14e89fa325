//! C ABI for the paircat simulator.
//!
//! Objects are opaque handles created by `paircat_*_new`-style functions and
//! released by the matching `*_free`. Every fallible call returns a
//! [`PaircatStatus`]; on failure [`paircat_last_error`] describes the problem.
//! Status values 1-3 match the command-line exit codes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;

use paircat::dynamics::{evolve_analytic, pulse_area, CouplingProfile, Internal, JointState};
use paircat::error::{Error, ErrorClass};
use paircat::fockspace::{pair_cat_truncated, LadderState, PairCatSpec};
use paircat::observables::{
    atomic_inversion, field_entropy, linear_entropy, reduced_atom, von_neumann_entropy, LogBase,
};
use paircat::quadrature::{GridSpec, Raster};
use paircat::runner::config::load_config;
use paircat::runner::export::write_series_csv;
use paircat::runner::{presets, quadrature_of, run, with_threads};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaircatStatus {
    Ok = 0,
    InvalidArgument = 1,
    Numerical = 2,
    Io = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Pair cat state on the charge-`q` ladder.
pub struct PaircatLadder {
    state: LadderState,
    modes_swapped: bool,
    n_max: usize,
    tail_bound: f64,
}

/// Coupling profile `lambda(t)`.
pub struct PaircatProfile(CouplingProfile);

/// Joint ion and vibration state.
pub struct PaircatJoint(JointState);

/// Quadrature distribution on a grid.
pub struct PaircatRaster(Raster);

/// Observables of a joint state (natural logarithms).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PaircatObservables {
    /// `P_e - P_g`.
    pub inversion: f64,
    pub s_vn_atom: f64,
    pub s_vn_field: f64,
    pub s_lin_2: f64,
    pub s_lin_3: f64,
    pub norm_sqr: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PaircatStatus {
    match e.class() {
        ErrorClass::Validation => PaircatStatus::InvalidArgument,
        ErrorClass::Numerical => PaircatStatus::Numerical,
        ErrorClass::Io => PaircatStatus::Io,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> PaircatStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PaircatStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("`{name}` is a null pointer"));
            PaircatStatus::NullPointer
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {message}"));
            PaircatStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn out_slot<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Core(Error::InvalidArgument(format!("`{name}` is not valid UTF-8"))))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn paircat_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn paircat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the normalized pair cat state. A negative `q` is folded onto `|q|`
/// by exchanging the modes; see [`paircat_ladder_modes_swapped`].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn paircat_pair_cat_new(
    xi_re: f64,
    xi_im: f64,
    q: i64,
    phi: f64,
    tail_epsilon: f64,
    out: *mut *mut PaircatLadder,
) -> PaircatStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let reduced = PairCatSpec::with_signed_charge(Complex64::new(xi_re, xi_im), q, phi, tail_epsilon)?;
        let (state, truncation) = pair_cat_truncated(&reduced.spec)?;
        *out = boxed(PaircatLadder {
            state,
            modes_swapped: reduced.modes_swapped,
            n_max: truncation.n_max,
            tail_bound: truncation.tail_bound,
        });
        Ok(())
    })
}

/// # Safety
/// `ladder` must come from [`paircat_pair_cat_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn paircat_ladder_free(ladder: *mut PaircatLadder) {
    free(ladder)
}

/// Charge `q >= 0` of the stored ladder and the truncation `N`.
///
/// # Safety
/// Pointers must be valid; any output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn paircat_ladder_info(
    ladder: *const PaircatLadder,
    q_out: *mut u32,
    n_max_out: *mut usize,
    tail_bound_out: *mut f64,
) -> PaircatStatus {
    guard(|| {
        let l = deref(ladder, "ladder")?;
        if let Some(q) = q_out.as_mut() {
            *q = l.state.q;
        }
        if let Some(n) = n_max_out.as_mut() {
            *n = l.n_max;
        }
        if let Some(t) = tail_bound_out.as_mut() {
            *t = l.tail_bound;
        }
        Ok(())
    })
}

/// Nonzero when a negative charge was folded by exchanging the modes.
///
/// # Safety
/// `ladder` must be valid or null (null gives 0).
#[no_mangle]
pub unsafe extern "C" fn paircat_ladder_modes_swapped(ladder: *const PaircatLadder) -> i32 {
    ladder.as_ref().map_or(0, |l| l.modes_swapped as i32)
}

/// Copies the `N + 1` coefficients into `re` and `im`, which hold `len` values.
///
/// # Safety
/// `re` and `im` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn paircat_ladder_coefficients(
    ladder: *const PaircatLadder,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> PaircatStatus {
    guard(|| {
        let l = deref(ladder, "ladder")?;
        if re.is_null() {
            return Err(Fail::Null("re"));
        }
        if im.is_null() {
            return Err(Fail::Null("im"));
        }
        let coeffs = &l.state.coeffs;
        if len < coeffs.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, need {}", coeffs.len())).into());
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (k, c) in coeffs.iter().enumerate() {
            re[k] = c.re;
            im[k] = c.im;
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn paircat_profile_constant(lambda: f64, out: *mut *mut PaircatProfile) -> PaircatStatus {
    make_profile(CouplingProfile::Constant { lambda }, out)
}

/// `lambda sinh(varpi t)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn paircat_profile_sinh(lambda: f64, varpi: f64, out: *mut *mut PaircatProfile) -> PaircatStatus {
    make_profile(CouplingProfile::Sinh { lambda, varpi }, out)
}

/// Linear interpolation through `len` knots `(times[k], values[k])`.
///
/// # Safety
/// `times` and `values` must be valid for `len` reads; `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn paircat_profile_piecewise(
    times: *const f64,
    values: *const f64,
    len: usize,
    out: *mut *mut PaircatProfile,
) -> PaircatStatus {
    if times.is_null() || values.is_null() {
        set_error("`times` or `values` is a null pointer".into());
        return PaircatStatus::NullPointer;
    }
    let t = std::slice::from_raw_parts(times, len);
    let v = std::slice::from_raw_parts(values, len);
    let knots = t.iter().copied().zip(v.iter().copied()).collect();
    make_profile(CouplingProfile::Piecewise { knots }, out)
}

unsafe fn make_profile(profile: CouplingProfile, out: *mut *mut PaircatProfile) -> PaircatStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        profile.validate()?;
        *out = boxed(PaircatProfile(profile));
        Ok(())
    })
}

/// # Safety
/// `profile` must come from a `paircat_profile_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn paircat_profile_free(profile: *mut PaircatProfile) {
    free(profile)
}

/// Pulse area `int_0^t lambda`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn paircat_pulse_area(profile: *const PaircatProfile, t: f64, out: *mut f64) -> PaircatStatus {
    guard(|| {
        let p = deref(profile, "profile")?;
        let out = out_slot(out, "out")?;
        *out = pulse_area(&p.0, t)?;
        Ok(())
    })
}

/// Joint state with the ion excited (`ground == 0`) or in the ground level.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn paircat_joint_new(
    ladder: *const PaircatLadder,
    ground: i32,
    out: *mut *mut PaircatJoint,
) -> PaircatStatus {
    guard(|| {
        let l = deref(ladder, "ladder")?;
        let out = out_slot(out, "out")?;
        let internal = if ground == 0 { Internal::Excited } else { Internal::Ground };
        *out = boxed(PaircatJoint(JointState::prepare(&l.state, internal)));
        Ok(())
    })
}

/// # Safety
/// `joint` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn paircat_joint_free(joint: *mut PaircatJoint) {
    free(joint)
}

/// Propagates `joint` to time `t` under `profile` into a new handle.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn paircat_joint_evolve(
    joint: *const PaircatJoint,
    profile: *const PaircatProfile,
    t: f64,
    out: *mut *mut PaircatJoint,
) -> PaircatStatus {
    guard(|| {
        let j = deref(joint, "joint")?;
        let p = deref(profile, "profile")?;
        let out = out_slot(out, "out")?;
        *out = boxed(PaircatJoint(evolve_analytic(&j.0, &p.0, t)?));
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn paircat_joint_observables(
    joint: *const PaircatJoint,
    out: *mut PaircatObservables,
) -> PaircatStatus {
    guard(|| {
        let j = &deref(joint, "joint")?.0;
        let out = out_slot(out, "out")?;
        let rho = reduced_atom(j);
        *out = PaircatObservables {
            inversion: atomic_inversion(j),
            s_vn_atom: von_neumann_entropy(&rho, LogBase::Natural),
            s_vn_field: field_entropy(j),
            s_lin_2: linear_entropy(&rho, 2)?,
            s_lin_3: linear_entropy(&rho, 3)?,
            norm_sqr: j.norm_sqr(),
        };
        Ok(())
    })
}

/// Rasterizes `|psi(x, y)|^2` on an `nx` by `ny` grid.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn paircat_quadrature(
    ladder: *const PaircatLadder,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
    out: *mut *mut PaircatRaster,
) -> PaircatStatus {
    guard(|| {
        let l = deref(ladder, "ladder")?;
        let out = out_slot(out, "out")?;
        let grid = GridSpec {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        };
        *out = boxed(PaircatRaster(quadrature_of(&l.state, l.modes_swapped, &grid)?));
        Ok(())
    })
}

/// # Safety
/// `raster` must come from [`paircat_quadrature`] or be null.
#[no_mangle]
pub unsafe extern "C" fn paircat_raster_free(raster: *mut PaircatRaster) {
    free(raster)
}

/// Copies `nx * ny` values, row-major over x (`values[i * ny + j] = P(x_i, y_j)`),
/// and reports the trapezoid norm estimate.
///
/// # Safety
/// `values` must be valid for `len` writes; `norm_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn paircat_raster_values(
    raster: *const PaircatRaster,
    values: *mut f64,
    len: usize,
    norm_out: *mut f64,
) -> PaircatStatus {
    guard(|| {
        let r = &deref(raster, "raster")?.0;
        if values.is_null() {
            return Err(Fail::Null("values"));
        }
        if len < r.values.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, need {}", r.values.len())).into());
        }
        std::slice::from_raw_parts_mut(values, len)[..r.values.len()].copy_from_slice(&r.values);
        if let Some(n) = norm_out.as_mut() {
            *n = r.norm_estimate;
        }
        Ok(())
    })
}

/// Runs a built-in preset and returns its time series as CSV text.
/// `threads == 0` uses every core. Release the string with [`paircat_string_free`].
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn paircat_run_preset_csv(name: *const c_char, threads: usize, out: *mut *mut c_char) -> PaircatStatus {
    guard(|| {
        let name = c_str(name, "name")?;
        let text = presets::find(name)?.text;
        run_csv(text, threads, out_slot(out, "out")?)
    })
}

/// Same as [`paircat_run_preset_csv`] for configuration text.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn paircat_run_config_csv(config: *const c_char, threads: usize, out: *mut *mut c_char) -> PaircatStatus {
    guard(|| {
        let text = c_str(config, "config")?;
        run_csv(text, threads, out_slot(out, "out")?)
    })
}

fn run_csv(text: &str, threads: usize, out: &mut *mut c_char) -> Result<(), Fail> {
    let config = load_config(text)?;
    let threads = (threads > 0).then_some(threads);
    let series = with_threads(threads, || run(&config))??;
    let mut buf = Vec::new();
    write_series_csv(&series, &mut buf)?;
    *out = CString::new(buf).expect("CSV has no NUL bytes").into_raw();
    Ok(())
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn paircat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
