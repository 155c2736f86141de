//! Maxwell–Bloch mean-field theory of the squeezed-mode laser.
//!
//! Variables: `F = ⟨A⟩`, `S = i⟨σ⟩*` and `D = −⟨σ_z⟩`.

use faer::{c64, Mat};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{annihilation, displacement, DensityMatrix, HilbertSpace, Operator, TAIL_TOL};
use crate::gaussian::{crop_state, padded_squeezed_thermal, GaussianState};
use crate::linalg;
use crate::lindblad::{rhs_matrix, LindbladTerm, MasterEquation};
use crate::ode::{Integrator, OdeOptions};

const BLOCH_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MFParams {
    pub g_tilde: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub c_prime: f64,
}

impl MFParams {
    pub fn new(g_tilde: f64, gamma: f64, kappa: f64, c_prime: f64) -> Result<Self> {
        let p = Self {
            g_tilde,
            gamma,
            kappa,
            c_prime,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with a prescribed effective cooperativity `C̃`.
    pub fn from_cooperativity(c_tilde: f64, gamma: f64, kappa: f64, c_prime: f64) -> Result<Self> {
        if !(c_tilde >= 0.0) || !c_tilde.is_finite() {
            return Err(Error::InvalidParameter(format!("C~ = {c_tilde}")));
        }
        Self::new(
            (c_tilde * gamma * kappa * (1.0 + c_prime)).sqrt(),
            gamma,
            kappa,
            c_prime,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("g_tilde", self.g_tilde),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("C'", self.c_prime),
        ] {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {x}")));
            }
        }
        if self.gamma == 0.0 || self.kappa == 0.0 {
            return Err(Error::InvalidParameter("gamma and kappa must be positive".into()));
        }
        Ok(())
    }

    /// `C̃ = g̃² / (γκ(1 + C′))`.
    pub fn c_tilde(&self) -> f64 {
        self.g_tilde * self.g_tilde / (self.gamma * self.kappa * (1.0 + self.c_prime))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanFieldState {
    pub f: c64,
    pub s: c64,
    pub d: f64,
}

impl MeanFieldState {
    pub fn validate(&self) -> Result<()> {
        if !(self.f.re.is_finite()
            && self.f.im.is_finite()
            && self.s.re.is_finite()
            && self.s.im.is_finite()
            && self.d.is_finite())
        {
            return Err(Error::NonFinite("mean-field state"));
        }
        if self.d.abs() > 1.0 + BLOCH_SLACK || self.s.norm() > 0.5 + BLOCH_SLACK {
            return Err(Error::InvalidState(format!(
                "mean-field state left the Bloch ball: |S| = {}, D = {}",
                self.s.norm(),
                self.d
            )));
        }
        Ok(())
    }

    fn pack(&self) -> Vec<c64> {
        vec![self.f, self.s, c64::new(self.d, 0.0)]
    }

    fn unpack(y: &[c64]) -> Self {
        Self {
            f: y[0],
            s: y[1],
            d: y[2].re,
        }
    }
}

/// Right-hand side of the Maxwell–Bloch equations.
pub fn mf_rhs(y: &MeanFieldState, p: &MFParams) -> MeanFieldState {
    let k = p.kappa * (1.0 + p.c_prime);
    MeanFieldState {
        f: y.s * p.g_tilde - y.f * k,
        s: y.f * (p.g_tilde * y.d) - y.s * p.gamma,
        d: -4.0 * p.g_tilde * (y.s * y.f.conj()).re - 2.0 * p.gamma * (y.d - 1.0),
    }
}

/// Steady-state photon number `|F̄|²`, zero below threshold.
pub fn mf_photon_number(p: &MFParams) -> f64 {
    let c = p.c_tilde();
    if c <= 1.0 {
        0.0
    } else {
        p.gamma * (c - 1.0) / (2.0 * p.kappa * (1.0 + p.c_prime) * c)
    }
}

/// Fixed point of [`mf_rhs`] with field phase `theta`.
///
/// Below threshold this is the trivial solution `F = S = 0`, `D = 1`.
pub fn mf_steady(p: &MFParams, theta: f64) -> Result<MeanFieldState> {
    p.validate()?;
    let c = p.c_tilde();
    if c <= 1.0 {
        return Ok(MeanFieldState {
            f: c64::new(0.0, 0.0),
            s: c64::new(0.0, 0.0),
            d: 1.0,
        });
    }
    let mag = mf_photon_number(p).sqrt();
    let f = c64::new(mag * theta.cos(), mag * theta.sin());
    let s = f * (p.kappa * (1.0 + p.c_prime) / p.g_tilde);
    Ok(MeanFieldState { f, s, d: 1.0 / c })
}

/// Integrates the Maxwell–Bloch equations, returning the state at each
/// requested time. The Bloch-ball bound is checked after every step.
pub fn mf_evolve(y0: &MeanFieldState, p: &MFParams, times: &[f64], opts: &OdeOptions) -> Result<Vec<MeanFieldState>> {
    p.validate()?;
    y0.validate()?;
    let t0 = times.first().copied().unwrap_or(0.0);
    let mut integ = Integrator::new(t0, y0.pack(), opts.clone());
    let mut rhs = |_t: f64, y: &[c64], dy: &mut [c64]| {
        dy.copy_from_slice(&mf_rhs(&MeanFieldState::unpack(y), p).pack());
        Ok(())
    };
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        integ.advance_to_with(t, &mut rhs, &mut |_, y| MeanFieldState::unpack(y).validate())?;
        out.push(MeanFieldState::unpack(integ.y()));
    }
    Ok(out)
}

/// Squeezing and thermal occupation `(r̃, ñ)` of the mean-field field state
/// for auxiliary cooperativity `C′` and squeezing parameter `r`.
pub fn mf_gaussian_parameters(c_prime: f64, r: f64) -> (f64, f64) {
    let vx = (c_prime + (2.0 * r).exp()) / (1.0 + c_prime);
    let vp = (c_prime + (-2.0 * r).exp()) / (1.0 + c_prime);
    let r_tilde = 0.25 * (vx / vp).ln();
    let n_tilde = ((vx * vp).sqrt() - 1.0) / 2.0;
    (r_tilde, n_tilde.max(0.0))
}

/// Gaussian solution of the field master equation for a fixed amplitude `F̄`.
pub fn gaussian_mf_solution(f_bar: c64, c_prime: f64, r: f64) -> Result<GaussianState> {
    if !(c_prime >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("C' = {c_prime}, r = {r}")));
    }
    let vx = (c_prime + (2.0 * r).exp()) / (1.0 + c_prime);
    let vp = (c_prime + (-2.0 * r).exp()) / (1.0 + c_prime);
    GaussianState::new([2.0 * f_bar.re, 2.0 * f_bar.im], [[vx, 0.0], [0.0, vp]])
}

/// Field-only master equation with the qubit replaced by its mean field,
/// in units of `κ`.
pub fn mf_field_equation(f_bar: c64, c_prime: f64, r: f64, space: HilbertSpace) -> Result<MasterEquation> {
    if space.n_qubits() != 0 {
        return Err(Error::InvalidParameter("expected a field-only space".into()));
    }
    let big_a = annihilation(space)?;
    let (u, v) = (r.cosh(), r.sinh());
    let k = big_a.adjoint().scaled(f_bar * c64::new(0.0, 1.0 + c_prime));
    let h = Operator::new_hermitian(space, (&k + &k.adjoint()).into_matrix())?;
    let a = &big_a.scaled_re(u) - &big_a.adjoint().scaled_re(v);
    let mut terms = vec![LindbladTerm::new(a, 1.0)?];
    if c_prime > 0.0 {
        terms.push(LindbladTerm::new(big_a, c_prime)?);
    }
    MasterEquation::with_static(h, terms)
}

/// Frobenius norm of the mean-field generator applied to `gs`, restricted to
/// the levels of `space`.
///
/// The generator acts on a padded Fock image so the window is free of
/// boundary effects; a state with noticeable population above the window
/// only triggers a warning.
pub fn mf_residual(gs: &GaussianState, f_bar: c64, c_prime: f64, r: f64, space: HilbertSpace) -> Result<f64> {
    if space.n_qubits() != 0 {
        return Err(Error::InvalidParameter("expected a field-only space".into()));
    }
    let n = space.field_dim();
    let padded = gs.padded_fock(n + 4)?;
    let tail: f64 = (n..padded.dim).map(|i| padded.rho[(i, i)].re).sum();
    if tail > TAIL_TOL {
        warn!("mean-field residual window of {n} levels misses population {tail:.3e}");
    }
    let me = mf_field_equation(f_bar, c_prime, r, HilbertSpace::field(padded.dim)?)?;
    let d = rhs_matrix(&me, &padded.rho, 0.0)?;
    Ok(linalg::frobenius(&Mat::from_fn(n, n, |i, j| d[(i, j)])))
}

/// Phase-averaged displaced squeezed thermal state with amplitude `|F̄|`.
///
/// The squeezing axis is fixed while the displacement phase is averaged
/// with an `n_phases`-point midpoint rule.
pub fn mf_ansatz(f_mag: f64, c_prime: f64, r: f64, space: HilbertSpace, n_phases: usize) -> Result<DensityMatrix> {
    if n_phases < 16 {
        return Err(Error::InvalidParameter(format!("n_phases = {n_phases}, need >= 16")));
    }
    if !(f_mag >= 0.0) || !f_mag.is_finite() {
        return Err(Error::InvalidParameter(format!("|F| = {f_mag}")));
    }
    if space.n_qubits() != 0 {
        return Err(Error::InvalidParameter("expected a field-only space".into()));
    }
    let (r_tilde, n_tilde) = mf_gaussian_parameters(c_prime, r);
    let padded = padded_squeezed_thermal(r_tilde, n_tilde, space.field_dim(), f_mag * f_mag)?;
    let m = padded.dim;
    let n = space.field_dim();
    if f_mag == 0.0 {
        return crop_state(&padded.rho, space, "mean-field ansatz");
    }
    let big = HilbertSpace::field(m)?;
    let dis = displacement(big, c64::new(f_mag, 0.0))?;
    // rows of D restricted to the kept levels
    let d_top = Mat::from_fn(n, m, |j, k| dis.matrix()[(j, k)]);
    let parts: Vec<Mat<c64>> = (0..n_phases)
        .into_par_iter()
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_phases as f64;
            let d_theta = Mat::from_fn(n, m, |j, l| {
                let ph = theta * (j as f64 - l as f64);
                d_top[(j, l)] * c64::new(ph.cos(), ph.sin())
            });
            &(&d_theta * &padded.rho) * d_theta.adjoint()
        })
        .collect();
    let mut acc = Mat::<c64>::zeros(n, n);
    for p in &parts {
        acc += p;
    }
    let w = 1.0 / n_phases as f64;
    let acc = Mat::from_fn(n, n, |i, j| acc[(i, j)] * w);
    // mass lost through the cropped rows is reported through the tail
    let kept: f64 = (0..n).map(|i| acc[(i, i)].re).sum();
    let top = n.div_ceil(10);
    let tail: f64 = (n - top..n).map(|i| acc[(i, i)].re).sum::<f64>() + (1.0 - kept).max(0.0);
    if tail > crate::fock::TAIL_TOL {
        return Err(Error::Truncation {
            context: "mean-field ansatz",
            field_dim: n,
            tail,
        });
    }
    DensityMatrix::from_raw(space, acc)
}
