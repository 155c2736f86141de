//! Wigner functions on rectangular phase-space grids.
//!
//! Coordinates are the quadratures `X = A + A†` and `P = i(A† − A)`, so the
//! vacuum is `exp(−(X² + P²)/2) / 2π`.

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{squeeze, DensityMatrix, HilbertSpace, STATE_TOL};
use crate::gaussian::{padded_dim, GaussianState};
use crate::linalg::{self, CMat};

const MIN_POINTS: usize = 16;
const MASS_TOL: f64 = 1e-3;
const IMAG_TOL: f64 = 1e-10;

/// Cell-centred grid: `x_i = x_min + (i + ½)(x_max − x_min)/nx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl PhaseGrid {
    pub fn new(x_min: f64, x_max: f64, nx: usize, p_min: f64, p_max: f64, np: usize) -> Result<Self> {
        if nx < MIN_POINTS || np < MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {MIN_POINTS} points per axis, got {nx}x{np}"
            )));
        }
        if !(x_max > x_min) || !(p_max > p_min) || ![x_min, x_max, p_min, p_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "grid extents must be finite and increasing".into(),
            ));
        }
        Ok(Self {
            x_min,
            x_max,
            nx,
            p_min,
            p_max,
            np,
        })
    }

    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n, -half_width, half_width, n)
    }

    /// Grid covering `mean ± sigmas·√V_ii` on each axis.
    pub fn covering(gs: &GaussianState, sigmas: f64, n: usize) -> Result<Self> {
        let m = gs.mean();
        let v = gs.cov();
        let hx = sigmas * v[0][0].sqrt();
        let hp = sigmas * v[1][1].sqrt();
        Self::new(m[0] - hx, m[0] + hx, n, m[1] - hp, m[1] + hp, n)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.np as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + (j as f64 + 0.5) * self.dp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Quadratures of the Bogoliubov mode `A`.
    ModeA,
    /// Quadratures of the cavity mode `a`.
    Cavity,
}

/// Sampled Wigner function, `values[j * nx + i] = W(x_i, p_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub basis: Basis,
    /// Squeezing parameter relating the two bases.
    pub squeeze_r: f64,
}

impl WignerField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx() * self.grid.dp()
    }

    /// Mean and covariance of the quadratures, normalized by the integral.
    pub fn moments(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let g = &self.grid;
        let (mut s, mut sx, mut sp, mut sxx, mut spp, mut sxp) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..g.np {
            let p = g.p(j);
            for i in 0..g.nx {
                let x = g.x(i);
                let w = self.at(i, j);
                s += w;
                sx += w * x;
                sp += w * p;
                sxx += w * x * x;
                spp += w * p * p;
                sxp += w * x * p;
            }
        }
        let (mx, mp) = (sx / s, sp / s);
        let cxp = sxp / s - mx * mp;
        ([mx, mp], [[sxx / s - mx * mx, cxp], [cxp, spp / s - mp * mp]])
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Linear interpolation of `W(x, p)`, zero outside the grid centres.
    pub fn interpolate(&self, x: f64, p: f64) -> f64 {
        let g = &self.grid;
        let fx = (x - g.x_min) / g.dx() - 0.5;
        let fp = (p - g.p_min) / g.dp() - 0.5;
        if !(fx >= 0.0 && fp >= 0.0 && fx <= (g.nx - 1) as f64 && fp <= (g.np - 1) as f64) {
            return 0.0;
        }
        let i0 = (fx.floor() as usize).min(g.nx - 2);
        let j0 = (fp.floor() as usize).min(g.np - 2);
        let tx = fx - i0 as f64;
        let tp = fp - j0 as f64;
        (1.0 - tx) * (1.0 - tp) * self.at(i0, j0)
            + tx * (1.0 - tp) * self.at(i0 + 1, j0)
            + (1.0 - tx) * tp * self.at(i0, j0 + 1)
            + tx * tp * self.at(i0 + 1, j0 + 1)
    }
}

/// Generalized Laguerre polynomial `L_n^{(α)}(x)` by upward recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Wigner function of the projector-like operator `|m⟩⟨n|` at `(x, p)`.
pub fn wigner_basis(m: usize, n: usize, x: f64, p: f64) -> c64 {
    let (hi, lo) = if m >= n { (m, n) } else { (n, m) };
    let k = hi - lo;
    let r2 = x * x + p * p;
    let lf = ln_factorials(hi);
    let sign = if lo % 2 == 0 { 1.0 } else { -1.0 };
    let log_mag = 0.5 * (lf[lo] - lf[hi]) - 0.5 * r2;
    let radial = sign * log_mag.exp() * laguerre(lo, k as f64, r2);
    // (X − iP)^k for m > n
    let z = c64::new(x, -p);
    let mut zk = c64::new(1.0, 0.0);
    for _ in 0..k {
        zk *= z;
    }
    let w = zk * (radial / (2.0 * std::f64::consts::PI));
    if m >= n {
        w
    } else {
        w.conj()
    }
}

/// Sums `Σ ρ_mn W_mn(x, p)` at a single point, returning the complex value.
fn wigner_point(rho: &CMat, lnf: &[f64], x: f64, p: f64) -> c64 {
    let d = rho.nrows();
    let r2 = x * x + p * p;
    let r = r2.sqrt();
    let phase = if r > 0.0 {
        c64::new(x / r, -p / r)
    } else {
        c64::new(1.0, 0.0)
    };
    let mut total = c64::new(0.0, 0.0);
    let mut e_k = c64::new(1.0, 0.0);
    for k in 0..d {
        // g_0 = R^k e^{-R²/2} / √k!
        let log_g0 = if k == 0 {
            -0.5 * r2
        } else if r > 0.0 {
            k as f64 * r.ln() - 0.5 * r2 - 0.5 * lnf[k]
        } else {
            f64::NEG_INFINITY
        };
        let g0 = log_g0.exp();
        let kf = k as f64;
        let mut lower = c64::new(0.0, 0.0);
        let mut upper = c64::new(0.0, 0.0);
        let (mut gm1, mut g) = (0.0, g0);
        for n in 0..d - k {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            lower += rho[(n + k, n)] * (sign * g);
            if k > 0 {
                upper += rho[(n, n + k)] * (sign * g);
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - r2) * g - (nf * (nf + kf)).sqrt() * gm1)
                / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
            gm1 = g;
            g = next;
        }
        total += lower * e_k;
        if k > 0 {
            total += upper * e_k.conj();
        }
        e_k *= phase;
    }
    total / (2.0 * std::f64::consts::PI)
}

fn sample(rho: &CMat, grid: &PhaseGrid) -> Result<Vec<f64>> {
    let lnf = ln_factorials(rho.nrows());
    let rows: Vec<Vec<c64>> = (0..grid.np)
        .into_par_iter()
        .map(|j| {
            let p = grid.p(j);
            (0..grid.nx).map(|i| wigner_point(rho, &lnf, grid.x(i), p)).collect()
        })
        .collect();
    let vals: Vec<c64> = rows.into_iter().flatten().collect();
    let peak = vals.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let imag = vals.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if !vals.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::NonFinite("Wigner function"));
    }
    if imag > IMAG_TOL * peak.max(1e-300) {
        return Err(Error::NotHermitian(imag));
    }
    Ok(vals.into_iter().map(|v| v.re).collect())
}

fn check_mass(field: &WignerField, rho: &CMat) -> Result<()> {
    let mass = field.integral();
    if mass < 1.0 - MASS_TOL {
        let gs = moments_of(rho)?;
        let m = gs.mean();
        let v = gs.cov();
        let hx = 6.0 * v[0][0].max(0.0).sqrt();
        let hp = 6.0 * v[1][1].max(0.0).sqrt();
        return Err(Error::GridTooSmall {
            mass,
            x_min: m[0] - hx,
            x_max: m[0] + hx,
            p_min: m[1] - hp,
            p_max: m[1] + hp,
        });
    }
    Ok(())
}

/// Gaussian with the first and second moments of a field state, used for
/// grid suggestions.
fn moments_of(rho: &CMat) -> Result<GaussianState> {
    let d = rho.nrows();
    let space = HilbertSpace::field(d)?;
    let dm = DensityMatrix::from_raw(space, rho.clone())?;
    let (m, n, a2) = crate::gaussian::field_moments(&dm)?;
    let c = a2 - m * m;
    let nc = n - m.norm_sqr();
    let vx = 1.0 + 2.0 * nc + 2.0 * c.re;
    let vp = 1.0 + 2.0 * nc - 2.0 * c.re;
    // moments of a non-Gaussian state can sit below the Gaussian bound
    GaussianState::new(
        [2.0 * m.re, 2.0 * m.im],
        [[vx.max(1.0 / vp.max(1e-12)), 0.0], [0.0, vp.max(1.0 / vx.max(1e-12))]],
    )
}

/// Ring crest on a positive phase-space half-axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crest {
    pub position: f64,
    pub peak: f64,
    /// Local Gaussian variance across the crest, `−W/W″`.
    pub variance: f64,
}

/// Locates the maximum of `W` along the positive `X` axis (or `P` axis
/// when `along_p`) in the state's own Fock frame and measures the width of
/// the profile there.
pub fn crest_along_axis(rho: &DensityMatrix, along_p: bool) -> Result<Crest> {
    if rho.space().n_qubits() != 0 {
        return Err(Error::InvalidParameter(
            "Wigner function needs a field-only state".into(),
        ));
    }
    let m = rho.matrix();
    let lnf = ln_factorials(m.nrows());
    let w = |t: f64| {
        let (x, p) = if along_p { (0.0, t) } else { (t, 0.0) };
        wigner_point(m, &lnf, x, p).re
    };
    let step = 0.01;
    let reach = 2.0 * (m.nrows() as f64).sqrt() + 6.0;
    let n = (reach / step).ceil() as usize;
    let values: Vec<f64> = (0..=n).into_par_iter().map(|k| w(k as f64 * step)).collect();
    let k = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
    let (mut lo, mut hi) = ((k as f64 - 1.0).max(0.0) * step, (k + 1) as f64 * step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if w(a) >= w(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let t = 0.5 * (lo + hi);
    let h = 1e-3;
    let peak = w(t);
    let curv = (w(t + h) - 2.0 * peak + w((t - h).abs())) / (h * h);
    if !(curv < 0.0) || !(peak > 0.0) {
        return Err(Error::InvalidParameter("no Wigner crest on the requested axis".into()));
    }
    Ok(Crest {
        position: t,
        peak,
        variance: -peak / curv,
    })
}

/// Wigner function of a field-only density matrix in its own Fock basis.
pub fn wigner_from_density(rho: &DensityMatrix, grid: &PhaseGrid, basis: Basis, squeeze_r: f64) -> Result<WignerField> {
    if rho.space().n_qubits() != 0 {
        return Err(Error::InvalidParameter(
            "Wigner function needs a field-only state".into(),
        ));
    }
    let dev = linalg::hermitian_deviation(rho.matrix());
    if dev > STATE_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let values = sample(rho.matrix(), grid)?;
    let field = WignerField {
        grid: *grid,
        values,
        basis,
        squeeze_r,
    };
    check_mass(&field, rho.matrix())?;
    Ok(field)
}

/// Grid that covers a field state with `±6σ` margins.
pub fn auto_grid(rho: &DensityMatrix, n: usize) -> Result<PhaseGrid> {
    let gs = moments_of(rho.matrix())?;
    let v = gs.cov();
    let m = gs.mean();
    let hx = 6.0 * v[0][0].sqrt() + 2.0;
    let hp = 6.0 * v[1][1].sqrt() + 2.0;
    PhaseGrid::new(m[0] - hx, m[0] + hx, n, m[1] - hp, m[1] + hp, n)
}

/// Maps an A-basis Wigner function to cavity quadratures using
/// `x_a = e^{−r} X`, `p_a = e^{r} P`.
///
/// Without a target grid the values are kept and the grid axes rescaled,
/// which is exact. With a target grid the A-basis field is interpolated.
pub fn wigner_change_basis(field: &WignerField, target: Option<&PhaseGrid>) -> Result<WignerField> {
    if field.basis != Basis::ModeA {
        return Err(Error::InvalidParameter("expected an A-basis Wigner function".into()));
    }
    let r = field.squeeze_r;
    let (sx, sp) = ((-r).exp(), r.exp());
    let g = &field.grid;
    match target {
        None => {
            let grid = PhaseGrid::new(g.x_min * sx, g.x_max * sx, g.nx, g.p_min * sp, g.p_max * sp, g.np)?;
            Ok(WignerField {
                grid,
                values: field.values.clone(),
                basis: Basis::Cavity,
                squeeze_r: r,
            })
        }
        Some(t) => {
            let mut values = Vec::with_capacity(t.len());
            for j in 0..t.np {
                for i in 0..t.nx {
                    values.push(field.interpolate(t.x(i) / sx, t.p(j) / sp));
                }
            }
            Ok(WignerField {
                grid: *t,
                values,
                basis: Basis::Cavity,
                squeeze_r: r,
            })
        }
    }
}

/// Cavity-basis Wigner function obtained by rewriting an A-basis state in
/// the Fock basis of `a` and summing there.
pub fn wigner_in_cavity_basis(rho_a_basis: &DensityMatrix, r: f64, grid: &PhaseGrid) -> Result<WignerField> {
    let n = rho_a_basis.space().field_dim();
    if rho_a_basis.space().n_qubits() != 0 {
        return Err(Error::InvalidParameter(
            "Wigner function needs a field-only state".into(),
        ));
    }
    let gs = moments_of(rho_a_basis.matrix())?;
    let m = padded_dim(
        n,
        r + gs.decompose().r_tilde.abs(),
        gs.decompose().n_tilde,
        gs.mean_amplitude().norm_sqr() * (2.0 * r.abs()).exp(),
    )?;
    let big = HilbertSpace::field(m)?;
    let mut padded = Mat::<c64>::zeros(m, m);
    for j in 0..n {
        for i in 0..n {
            padded[(i, j)] = rho_a_basis.get(i, j);
        }
    }
    let s = squeeze(big, -r)?;
    let rho = &(s.matrix() * &padded) * s.matrix().adjoint();
    let dm = DensityMatrix::from_raw(big, rho)?;
    dm.check_truncation("cavity-basis Wigner function")?;
    let values = sample(dm.matrix(), grid)?;
    let field = WignerField {
        grid: *grid,
        values,
        basis: Basis::Cavity,
        squeeze_r: r,
    };
    check_mass(&field, dm.matrix())?;
    Ok(field)
}

/// Closed-form Wigner function of a Gaussian state.
pub fn gaussian_wigner(gs: &GaussianState, grid: &PhaseGrid, basis: Basis, squeeze_r: f64) -> WignerField {
    let v = gs.cov();
    let m = gs.mean();
    let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.np {
        let dp = grid.p(j) - m[1];
        for i in 0..grid.nx {
            let dx = grid.x(i) - m[0];
            let q = (v[1][1] * dx * dx - 2.0 * v[0][1] * dx * dp + v[0][0] * dp * dp) / det;
            values.push(norm * (-0.5 * q).exp());
        }
    }
    WignerField {
        grid: *grid,
        values,
        basis,
        squeeze_r,
    }
}
