//! Single-mode Gaussian states in the quadrature convention `x = A + A†`,
//! `p = i(A† − A)` (vacuum covariance `I`).

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{annihilation, displacement, expectation, rotation, squeeze, DensityMatrix, HilbertSpace};
use crate::linalg::CMat;

const PHYSICAL_TOL: f64 = 1e-10;
const MAX_PADDED_DIM: usize = 1600;
const THERMAL_WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

/// `ρ = D(α) R(φ) S(r̃) ρ_th(ñ) S†(r̃) R†(φ) D†(α)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianDecomposition {
    pub alpha: c64,
    pub phi: f64,
    pub r_tilde: f64,
    pub n_tilde: f64,
}

fn det2(v: &[[f64; 2]; 2]) -> f64 {
    v[0][0] * v[1][1] - v[0][1] * v[1][0]
}

impl GaussianState {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        if mean.iter().chain(cov.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Gaussian moments"));
        }
        let scale = cov[0][0].abs().max(cov[1][1].abs()).max(1.0);
        if (cov[0][1] - cov[1][0]).abs() > 1e-12 * scale {
            return Err(Error::InvalidState("covariance matrix is not symmetric".into()));
        }
        let sym = (cov[0][1] + cov[1][0]) / 2.0;
        let cov = [[cov[0][0], sym], [sym, cov[1][1]]];
        if cov[0][0] <= 0.0 || det2(&cov) <= 0.0 {
            return Err(Error::InvalidState("covariance matrix is not positive definite".into()));
        }
        if det2(&cov) < 1.0 - PHYSICAL_TOL {
            return Err(Error::InvalidState(format!(
                "covariance violates the uncertainty bound: det V = {}",
                det2(&cov)
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum() -> Self {
        Self {
            mean: [0.0, 0.0],
            cov: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn coherent(alpha: c64) -> Self {
        Self {
            mean: [2.0 * alpha.re, 2.0 * alpha.im],
            cov: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn thermal(n: f64) -> Result<Self> {
        if !(n >= 0.0) {
            return Err(Error::InvalidParameter(format!("thermal occupation {n}")));
        }
        let v = 2.0 * n + 1.0;
        Self::new([0.0, 0.0], [[v, 0.0], [0.0, v]])
    }

    /// From `⟨A⟩`, `⟨A†A⟩` and `⟨A²⟩`, using central moments.
    pub fn from_moments(mean_a: c64, n_a: f64, a2: c64) -> Result<Self> {
        let c = a2 - mean_a * mean_a;
        let n_c = n_a - mean_a.norm_sqr();
        let vxx = 1.0 + 2.0 * n_c + 2.0 * c.re;
        let vpp = 1.0 + 2.0 * n_c - 2.0 * c.re;
        let vxp = 2.0 * c.im;
        Self::new([2.0 * mean_a.re, 2.0 * mean_a.im], [[vxx, vxp], [vxp, vpp]])
    }

    /// Moments of a field-only density matrix.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        let (m, n, a2) = field_moments(rho)?;
        Self::from_moments(m, n, a2)
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn cov(&self) -> [[f64; 2]; 2] {
        self.cov
    }

    pub fn det(&self) -> f64 {
        det2(&self.cov)
    }

    /// `⟨A⟩`.
    pub fn mean_amplitude(&self) -> c64 {
        c64::new(self.mean[0] / 2.0, self.mean[1] / 2.0)
    }

    /// `⟨A†A⟩`.
    pub fn photon_number(&self) -> f64 {
        (self.cov[0][0] + self.cov[1][1] - 2.0) / 4.0 + self.mean_amplitude().norm_sqr()
    }

    pub fn purity(&self) -> f64 {
        1.0 / self.det().sqrt()
    }

    /// Applies a real 2x2 symplectic map to mean and covariance.
    pub fn transform(&self, s: [[f64; 2]; 2]) -> Result<Self> {
        let m = [
            s[0][0] * self.mean[0] + s[0][1] * self.mean[1],
            s[1][0] * self.mean[0] + s[1][1] * self.mean[1],
        ];
        let v = self.cov;
        let mut sv = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                sv[i][j] = s[i][0] * v[0][j] + s[i][1] * v[1][j];
            }
        }
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = sv[i][0] * s[j][0] + sv[i][1] * s[j][1];
            }
        }
        out[0][1] = 0.5 * (out[0][1] + out[1][0]);
        out[1][0] = out[0][1];
        Self::new(m, out)
    }

    pub fn compose(dec: &GaussianDecomposition) -> Result<Self> {
        if !(dec.n_tilde >= 0.0) {
            return Err(Error::InvalidParameter(format!("n_tilde = {}", dec.n_tilde)));
        }
        let base = 2.0 * dec.n_tilde + 1.0;
        let e = (2.0 * dec.r_tilde).exp();
        let (s, c) = dec.phi.sin_cos();
        let (l1, l2) = (base * e, base / e);
        let cov = [
            [c * c * l1 + s * s * l2, c * s * (l1 - l2)],
            [c * s * (l1 - l2), s * s * l1 + c * c * l2],
        ];
        Self::new([2.0 * dec.alpha.re, 2.0 * dec.alpha.im], cov)
    }

    /// Displacement, rotation, squeezing and thermal occupation.
    ///
    /// `r̃ >= 0` and `φ ∈ (−π/2, π/2]`; `φ = 0` whenever `r̃ = 0`.
    pub fn decompose(&self) -> GaussianDecomposition {
        let [[a, b], [_, c]] = self.cov;
        let half_sum = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let l1 = half_sum + rad;
        let l2 = (half_sum - rad).max(f64::MIN_POSITIVE);
        let det = self.det().max(1.0);
        let n_tilde = ((det.sqrt() - 1.0) / 2.0).max(0.0);
        let (phi, r_tilde) = if rad <= 1e-13 * half_sum {
            (0.0, 0.0)
        } else {
            let phi = 0.5 * (2.0 * b).atan2(a - c);
            let phi = if phi <= -std::f64::consts::FRAC_PI_2 {
                phi + std::f64::consts::PI
            } else {
                phi
            };
            (phi, 0.25 * (l1 / l2).ln())
        };
        GaussianDecomposition {
            alpha: self.mean_amplitude(),
            phi,
            r_tilde,
            n_tilde,
        }
    }

    /// Fock-basis density matrix on a field-only space.
    pub fn to_fock(&self, space: HilbertSpace) -> Result<DensityMatrix> {
        let padded = self.padded_fock(space.field_dim())?;
        crop_state(&padded.rho, space, "Gaussian state to Fock basis")
    }

    /// Fock matrix on an enlarged space whose leading `field_dim` levels
    /// are accurate.
    pub(crate) fn padded_fock(&self, field_dim: usize) -> Result<Padded> {
        let dec = self.decompose();
        let padded = padded_squeezed_thermal(dec.r_tilde, dec.n_tilde, field_dim, dec.alpha.norm_sqr())?;
        let m = padded.dim;
        let big = HilbertSpace::field(m)?;
        let rot = rotation(big, dec.phi)?;
        let dis = displacement(big, dec.alpha)?;
        let u = dis.matrix() * rot.matrix();
        Ok(Padded {
            dim: m,
            rho: &(&u * &padded.rho) * u.adjoint(),
        })
    }
}

/// Squeezed thermal state `S(r̃) ρ_th(ñ) S†(r̃)` on an enlarged Fock space.
pub(crate) struct Padded {
    pub dim: usize,
    pub rho: CMat,
}

pub(crate) fn padded_dim(field_dim: usize, r_tilde: f64, n_tilde: f64, alpha_sq: f64) -> Result<usize> {
    let mut m = (2 * field_dim).max(field_dim + 32);
    let ratio = n_tilde / (1.0 + n_tilde);
    loop {
        let sq_ok = (2.0 * r_tilde.abs()).exp() * (2.0 * n_tilde + 1.0) <= m as f64 / 4.0;
        let disp_ok = alpha_sq <= m as f64 / 4.0;
        let th_ok = ratio.powi(m as i32) <= THERMAL_WEIGHT_TOL;
        // displaced blob reaching out along its widest quadrature
        let reach = alpha_sq.sqrt() + 3.5 * (r_tilde.abs().exp() * (2.0 * n_tilde + 1.0).sqrt());
        let reach_ok = 1.2 * reach * reach <= m as f64;
        if sq_ok && disp_ok && th_ok && reach_ok {
            return Ok(m);
        }
        m = m * 3 / 2;
        if m > MAX_PADDED_DIM {
            return Err(Error::Truncation {
                context: "Gaussian state needs an oversized Fock space",
                field_dim,
                tail: f64::NAN,
            });
        }
    }
}

pub(crate) fn padded_squeezed_thermal(r_tilde: f64, n_tilde: f64, field_dim: usize, alpha_sq: f64) -> Result<Padded> {
    let m = padded_dim(field_dim, r_tilde, n_tilde, alpha_sq)?;
    let big = HilbertSpace::field(m)?;
    let th = DensityMatrix::thermal(big, n_tilde)?;
    let rho = if r_tilde == 0.0 {
        th.into_matrix()
    } else {
        let s = squeeze(big, r_tilde)?;
        &(s.matrix() * th.matrix()) * s.matrix().adjoint()
    };
    Ok(Padded { dim: m, rho })
}

/// Crops a padded field state to `space`, failing when the discarded or
/// top-level population is too large.
pub(crate) fn crop_state(rho: &CMat, space: HilbertSpace, context: &'static str) -> Result<DensityMatrix> {
    if space.n_qubits() != 0 {
        return Err(Error::InvalidParameter("expected a field-only space".into()));
    }
    let n = space.field_dim();
    let total: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
    let kept: f64 = (0..n).map(|i| rho[(i, i)].re).sum();
    let lost = (total - kept).max(0.0);
    let top = n.div_ceil(10);
    let tail: f64 = (n - top..n).map(|i| rho[(i, i)].re).sum::<f64>() + lost;
    if tail > crate::fock::TAIL_TOL {
        return Err(Error::Truncation {
            context,
            field_dim: n,
            tail,
        });
    }
    let m = Mat::from_fn(n, n, |i, j| rho[(i, j)]);
    DensityMatrix::from_raw(space, m)
}

/// `(⟨A⟩, ⟨A†A⟩, ⟨A²⟩)` of a field-only state.
pub fn field_moments(rho: &DensityMatrix) -> Result<(c64, f64, c64)> {
    let space = rho.space();
    if space.n_qubits() != 0 {
        return Err(Error::InvalidParameter("moments need a field-only state".into()));
    }
    let a = annihilation(space)?;
    let m = expectation(&a, rho)?;
    let n = expectation(&(&a.adjoint() * &a), rho)?.re;
    let a2 = expectation(&(&a * &a), rho)?;
    Ok((m, n, a2))
}

/// Same state described in the quadratures of `a`, given `A = S_a†(r) a S_a(r)`.
pub fn symplectic_change_to_a_basis(gs: &GaussianState, r: f64) -> Result<GaussianState> {
    gs.transform([[(-r).exp(), 0.0], [0.0, r.exp()]])
}

/// Closed-form Uhlmann fidelity `(tr √(√ρ σ √ρ))²` of two single-mode
/// Gaussian states.
pub fn gaussian_fidelity(a: &GaussianState, b: &GaussianState) -> f64 {
    let s = [
        [a.cov[0][0] + b.cov[0][0], a.cov[0][1] + b.cov[0][1]],
        [a.cov[1][0] + b.cov[1][0], a.cov[1][1] + b.cov[1][1]],
    ];
    let det_s = det2(&s);
    let dd = [a.mean[0] - b.mean[0], a.mean[1] - b.mean[1]];
    // dᵀ S⁻¹ d with S⁻¹ = adj(S)/det(S)
    let quad = (s[1][1] * dd[0] * dd[0] - 2.0 * s[0][1] * dd[0] * dd[1] + s[0][0] * dd[1] * dd[1]) / det_s;
    let big_delta = det_s / 4.0;
    let small_delta = ((a.det() - 1.0).max(0.0) * (b.det() - 1.0).max(0.0)) / 4.0;
    let denom = (big_delta + small_delta).sqrt() - small_delta.sqrt();
    ((-0.5 * quad).exp() / denom).clamp(0.0, 1.0)
}
