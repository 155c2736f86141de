//! C interface to the `sqzlaser` library.
//!
//! Every function returns an [`SqzStatus`]. On failure the message is kept in
//! thread-local storage and can be read with [`sqz_last_error`]. States and
//! Wigner grids cross the boundary as opaque handles owned by the caller and
//! released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use sqzlaser::dressing::{bessel_j, dress, DressedCoupling};
use sqzlaser::fock::{expectation, number, DensityMatrix, HilbertSpace};
use sqzlaser::lindblad::{
    fidelity, model_single_qubit_laser, model_squeezed_laser_effective, reduced_field, steady_state, SteadyStateMethod,
};
use sqzlaser::meanfield::{mf_ansatz, mf_gaussian_parameters, mf_photon_number, mf_steady, MFParams};
use sqzlaser::scenario::{resolve, run, ScenarioKind};
use sqzlaser::wigner::{wigner_from_density, wigner_in_cavity_basis, Basis, PhaseGrid, WignerField};
use sqzlaser::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Fock truncation or phase-space grid too small for the state.
    Truncation = 3,
    /// Solver, integrator or linear algebra failure.
    Numerical = 4,
    Io = 5,
    /// A scenario finished but some sweep points failed.
    PartialFailure = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SqzStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::Json(_)
            | Error::DimensionMismatch(_)
            | Error::IndexOutOfRange { .. }
            | Error::BesselOrder(_)
            | Error::DegenerateDressing(_) => SqzStatus::InvalidArgument,
            Error::Truncation { .. } | Error::GridTooSmall { .. } => SqzStatus::Truncation,
            Error::Io(_) => SqzStatus::Io,
            _ => SqzStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SqzStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SqzStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<SqzStatus, Failure>) -> SqzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside sqzlaser".into());
            SqzStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<SqzStatus, Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(SqzStatus::Ok)
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

/// Opaque density matrix.
pub struct SqzDensityMatrix(DensityMatrix);

/// Opaque Wigner function on a rectangular grid.
pub struct SqzWignerField(WignerField);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SqzDressedCoupling {
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub g_tilde: f64,
    pub norm_n: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SqzMeanField {
    pub f_re: f64,
    pub f_im: f64,
    pub s_re: f64,
    pub s_im: f64,
    pub d: f64,
    /// `|F̄|²`
    pub photons: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqzBasis {
    ModeA = 0,
    Cavity = 1,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sqz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sqz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sqz_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn sqz_bessel_j(order: i32, x: f64, out: *mut f64) -> SqzStatus {
    guard(|| write(out, bessel_j(order, x)?, "out"))
}

/// Bogoliubov dressing of the qubit coupling by sideband drives.
///
/// # Safety
/// `out` must be null or point to a writable `SqzDressedCoupling`.
#[no_mangle]
pub unsafe extern "C" fn sqz_dress(eta1: f64, eta2: f64, g: f64, out: *mut SqzDressedCoupling) -> SqzStatus {
    guard(|| {
        let d = dress(eta1, eta2, g)?;
        let value = SqzDressedCoupling {
            u: d.u,
            v: d.v,
            r: d.r,
            g_tilde: d.g_tilde,
            norm_n: d.norm_n,
        };
        write(out, value, "out")
    })
}

/// Mean-field fixed point with field phase `theta`.
///
/// # Safety
/// `out` must be null or point to a writable `SqzMeanField`.
#[no_mangle]
pub unsafe extern "C" fn sqz_mf_steady(
    c_tilde: f64,
    gamma: f64,
    kappa: f64,
    c_prime: f64,
    theta: f64,
    out: *mut SqzMeanField,
) -> SqzStatus {
    guard(|| {
        let p = MFParams::from_cooperativity(c_tilde, gamma, kappa, c_prime)?;
        let y = mf_steady(&p, theta)?;
        let value = SqzMeanField {
            f_re: y.f.re,
            f_im: y.f.im,
            s_re: y.s.re,
            s_im: y.s.im,
            d: y.d,
            photons: mf_photon_number(&p),
        };
        write(out, value, "out")
    })
}

/// Squeezing and thermal occupation of the mean-field Gaussian solution.
///
/// # Safety
/// `r_tilde` and `n_tilde` must be null or point to writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sqz_mf_gaussian_parameters(
    c_prime: f64,
    r: f64,
    r_tilde: *mut f64,
    n_tilde: *mut f64,
) -> SqzStatus {
    guard(|| {
        if r_tilde.is_null() || n_tilde.is_null() {
            return Err(null("output"));
        }
        if !c_prime.is_finite() || c_prime < 0.0 || !r.is_finite() {
            return Err(invalid(format!("c_prime = {c_prime}, r = {r}")));
        }
        let (rt, nt) = mf_gaussian_parameters(c_prime, r);
        write(r_tilde, rt, "r_tilde")?;
        write(n_tilde, nt, "n_tilde")
    })
}

unsafe fn emit_state(out: *mut *mut SqzDensityMatrix, rho: DensityMatrix) -> Result<SqzStatus, Failure> {
    write(out, Box::into_raw(Box::new(SqzDensityMatrix(rho))), "out")
}

/// Steady state of the single-qubit laser with counter-rotating coupling.
///
/// # Safety
/// `out` must be null or point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sqz_steady_single_laser(
    g: f64,
    gamma: f64,
    kappa: f64,
    field_dim: usize,
    out: *mut *mut SqzDensityMatrix,
) -> SqzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let space = HilbertSpace::new(1, field_dim)?;
        let me = model_single_qubit_laser(g, gamma, kappa, space)?;
        let rho = steady_state(&me, SteadyStateMethod::Direct)?;
        rho.check_truncation("single-qubit laser steady state")?;
        emit_state(out, rho)
    })
}

/// Steady state of the engineered-dissipation laser in the Fock basis of
/// the squeezed mode.
///
/// # Safety
/// `out` must be null or point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sqz_steady_effective(
    r: f64,
    g_tilde: f64,
    gamma: f64,
    kappa: f64,
    c_prime: f64,
    field_dim: usize,
    out: *mut *mut SqzDensityMatrix,
) -> SqzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let space = HilbertSpace::new(1, field_dim)?;
        let d = DressedCoupling::from_squeezing(r, g_tilde);
        let me = model_squeezed_laser_effective(&d, gamma, kappa, c_prime, space)?;
        let rho = steady_state(&me, SteadyStateMethod::Direct)?;
        rho.check_truncation("engineered-dissipation steady state")?;
        emit_state(out, rho)
    })
}

/// Phase-averaged mean-field state of the field mode.
///
/// # Safety
/// `out` must be null or point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sqz_mf_ansatz(
    f_mag: f64,
    c_prime: f64,
    r: f64,
    field_dim: usize,
    n_phases: usize,
    out: *mut *mut SqzDensityMatrix,
) -> SqzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let rho = mf_ansatz(f_mag, c_prime, r, HilbertSpace::field(field_dim)?, n_phases)?;
        emit_state(out, rho)
    })
}

/// # Safety
/// `rho` must be a live handle; `n_qubits`, `field_dim` and `dim` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn sqz_density_shape(
    rho: *const SqzDensityMatrix,
    n_qubits: *mut usize,
    field_dim: *mut usize,
    dim: *mut usize,
) -> SqzStatus {
    guard(|| {
        let space = borrow(rho, "rho")?.0.space();
        if n_qubits.is_null() || field_dim.is_null() || dim.is_null() {
            return Err(null("output"));
        }
        write(n_qubits, space.n_qubits(), "n_qubits")?;
        write(field_dim, space.field_dim(), "field_dim")?;
        write(dim, space.dim(), "dim")
    })
}

/// Matrix element `ρ_ij`; basis order is qubits first, excited level first.
///
/// # Safety
/// `rho` must be a live handle; `re` and `im` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sqz_density_element(
    rho: *const SqzDensityMatrix,
    i: usize,
    j: usize,
    re: *mut f64,
    im: *mut f64,
) -> SqzStatus {
    guard(|| {
        let rho = &borrow(rho, "rho")?.0;
        let d = rho.dim();
        if i >= d || j >= d {
            return Err(invalid(format!("element ({i}, {j}) outside dimension {d}")));
        }
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let z = rho.get(i, j);
        write(re, z.re, "re")?;
        write(im, z.im, "im")
    })
}

/// Field state after tracing out the qubits.
///
/// # Safety
/// `rho` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sqz_density_reduced_field(
    rho: *const SqzDensityMatrix,
    out: *mut *mut SqzDensityMatrix,
) -> SqzStatus {
    guard(|| {
        let rho = &borrow(rho, "rho")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        emit_state(out, reduced_field(rho)?)
    })
}

/// Mean excitation number of the field mode.
///
/// # Safety
/// `rho` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sqz_density_photon_number(rho: *const SqzDensityMatrix, out: *mut f64) -> SqzStatus {
    guard(|| {
        let rho = &borrow(rho, "rho")?.0;
        let n = expectation(&number(rho.space())?, rho)?.re;
        write(out, n, "out")
    })
}

/// Uhlmann fidelity of two states on the same space.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sqz_density_fidelity(
    a: *const SqzDensityMatrix,
    b: *const SqzDensityMatrix,
    out: *mut f64,
) -> SqzStatus {
    guard(|| {
        let f = fidelity(&borrow(a, "a")?.0, &borrow(b, "b")?.0)?;
        write(out, f, "out")
    })
}

/// # Safety
/// `rho` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sqz_density_free(rho: *mut SqzDensityMatrix) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// Wigner function of a field-only state on a square `points × points` grid
/// over `[-half_width, half_width]²`. With `SqzBasis::Cavity` the state is
/// taken to be written in the squeezed-mode basis with squeezing `r`.
///
/// # Safety
/// `rho` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sqz_wigner(
    rho: *const SqzDensityMatrix,
    half_width: f64,
    points: usize,
    basis: SqzBasis,
    r: f64,
    out: *mut *mut SqzWignerField,
) -> SqzStatus {
    guard(|| {
        let rho = &borrow(rho, "rho")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = PhaseGrid::square(half_width, points)?;
        let field = match basis {
            SqzBasis::ModeA => wigner_from_density(rho, &grid, Basis::ModeA, r)?,
            SqzBasis::Cavity => wigner_in_cavity_basis(rho, r, &grid)?,
        };
        write(out, Box::into_raw(Box::new(SqzWignerField(field))), "out")
    })
}

/// Grid size and extents.
///
/// # Safety
/// `w` must be a live handle; `extents` must be null or hold four doubles
/// (`x_min`, `x_max`, `p_min`, `p_max`).
#[no_mangle]
pub unsafe extern "C" fn sqz_wigner_shape(
    w: *const SqzWignerField,
    nx: *mut usize,
    np: *mut usize,
    extents: *mut f64,
) -> SqzStatus {
    guard(|| {
        let g = &borrow(w, "w")?.0.grid;
        if nx.is_null() || np.is_null() {
            return Err(null("output"));
        }
        write(nx, g.nx, "nx")?;
        write(np, g.np, "np")?;
        if !extents.is_null() {
            let e = std::slice::from_raw_parts_mut(extents, 4);
            e.copy_from_slice(&[g.x(0), g.x(g.nx - 1), g.p(0), g.p(g.np - 1)]);
        }
        Ok(SqzStatus::Ok)
    })
}

/// Copies the values with `x` varying fastest: `buf[j * nx + i] = W(x_i, p_j)`.
///
/// # Safety
/// `w` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sqz_wigner_values(w: *const SqzWignerField, buf: *mut f64, len: usize) -> SqzStatus {
    guard(|| {
        let v = &borrow(w, "w")?.0.values;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < v.len() {
            return Err(Failure(
                SqzStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", v.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, v.len()).copy_from_slice(v);
        Ok(SqzStatus::Ok)
    })
}

/// Midpoint-rule integral of the Wigner function over its grid.
///
/// # Safety
/// `w` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sqz_wigner_integral(w: *const SqzWignerField, out: *mut f64) -> SqzStatus {
    guard(|| write(out, borrow(w, "w")?.0.integral(), "out"))
}

/// # Safety
/// `w` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sqz_wigner_free(w: *mut SqzWignerField) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Runs a named scenario and writes its files into `out_dir`.
///
/// `preset` and `config_json` may be null. `threads` of 0 uses all cores.
/// Returns `PartialFailure` when the run completed with failed sweep points;
/// their number goes to `failed_points` when that pointer is non-null.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `failed_points` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn sqz_run_scenario(
    scenario: *const c_char,
    preset: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    threads: usize,
    failed_points: *mut usize,
) -> SqzStatus {
    guard(|| {
        let kind: ScenarioKind = text(scenario, "scenario")?.parse()?;
        let preset = optional_text(preset, "preset")?;
        let file = match optional_text(config_json, "config_json")? {
            Some(s) => Some(serde_json::from_str::<serde_json::Value>(s).map_err(Error::from)?),
            None => None,
        };
        let out_dir = text(out_dir, "out_dir")?;
        let cfg = resolve(Some(kind), preset, file.as_ref(), &[])?;
        let outcome = run(&cfg, Path::new(out_dir), (threads > 0).then_some(threads))?;
        if !failed_points.is_null() {
            failed_points.write(outcome.failed_points);
        }
        if outcome.failed_points > 0 {
            return Err(Failure(
                SqzStatus::PartialFailure,
                format!("{} sweep point(s) failed", outcome.failed_points),
            ));
        }
        Ok(SqzStatus::Ok)
    })
}
