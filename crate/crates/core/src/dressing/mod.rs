//! Bichromatic drive dressing: Bessel weights, the (u, v, g̃) map, resonance
//! audit and the lab-frame, interaction-picture and effective Hamiltonians.

mod bessel;

pub use bessel::{bessel_j, bessel_j_seq, MAX_ORDER};

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{annihilation, qubit_ops, HilbertSpace, Operator};

const DEGENERACY_TOL: f64 = 1e-12;
const SIDEBAND_TOL: f64 = 1e-9;

/// Physical parameters of the driven qubit-cavity system, angular units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega: f64,
    pub epsilon: f64,
    pub g: f64,
    pub eta1: f64,
    pub eta2: f64,
    #[serde(rename = "Omega1")]
    pub drive1: f64,
    #[serde(rename = "Omega2")]
    pub drive2: f64,
    pub gamma: f64,
    pub kappa: f64,
    #[serde(default)]
    pub g_prime: Option<f64>,
    #[serde(default)]
    pub gamma_prime: Option<f64>,
}

impl SystemParams {
    /// Parameters with both drives placed on the sidebands `ε ∓ ω`.
    pub fn sideband(omega: f64, epsilon: f64, g: f64, eta1: f64, eta2: f64, gamma: f64, kappa: f64) -> Self {
        Self {
            omega,
            epsilon,
            g,
            eta1,
            eta2,
            drive1: epsilon - omega,
            drive2: epsilon + omega,
            gamma,
            kappa,
            g_prime: None,
            gamma_prime: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut named = vec![
            ("omega", self.omega),
            ("epsilon", self.epsilon),
            ("g", self.g),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("Omega1", self.drive1),
            ("Omega2", self.drive2),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
        ];
        if let Some(x) = self.g_prime {
            named.push(("g_prime", x));
        }
        if let Some(x) = self.gamma_prime {
            named.push(("gamma_prime", x));
        }
        for (name, x) in named {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative (got {x})"
                )));
            }
        }
        if self.epsilon <= self.omega {
            return Err(Error::InvalidParameter(format!(
                "qubit splitting epsilon = {} must exceed the cavity frequency omega = {}",
                self.epsilon, self.omega
            )));
        }
        Ok(())
    }

    /// True when `Ω1 = ε − ω` and `Ω2 = ε + ω` within 1e-9 relative.
    pub fn on_sidebands(&self) -> bool {
        let lo = self.epsilon - self.omega;
        let hi = self.epsilon + self.omega;
        (self.drive1 - lo).abs() <= SIDEBAND_TOL * lo.abs().max(f64::MIN_POSITIVE)
            && (self.drive2 - hi).abs() <= SIDEBAND_TOL * hi.abs()
    }

    pub fn dressed(&self) -> Result<DressedCoupling> {
        if !self.on_sidebands() {
            return Err(Error::InvalidParameter(
                "dressing requires sideband drives Omega1 = epsilon - omega, Omega2 = epsilon + omega".into(),
            ));
        }
        dress(self.eta1, self.eta2, self.g)
    }
}

/// Output of the Bessel dressing map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedCoupling {
    pub u: f64,
    pub v: f64,
    /// `artanh` of the smaller over the larger of `|u|`, `|v|`.
    pub r: f64,
    pub g_tilde: f64,
    pub norm_n: f64,
}

impl DressedCoupling {
    /// Coupling with the given squeezing and renormalized strength.
    pub fn from_squeezing(r: f64, g_tilde: f64) -> Self {
        Self {
            u: r.cosh(),
            v: r.sinh(),
            r,
            g_tilde,
            norm_n: f64::NAN,
        }
    }

    /// `|u| > |v|`: the interaction is of counter-rotating type in mode A.
    pub fn counter_rotating(&self) -> bool {
        self.u.abs() > self.v.abs()
    }

    pub fn bogoliubov_residual(&self) -> f64 {
        ((self.u * self.u - self.v * self.v).abs() - 1.0).abs()
    }
}

/// Bessel dressing `(η1, η2, g) -> (u, v, r, g̃)`.
pub fn dress(eta1: f64, eta2: f64, g: f64) -> Result<DressedCoupling> {
    for (name, x) in [("eta1", eta1), ("eta2", eta2), ("g", g)] {
        if !x.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} = {x}")));
        }
    }
    let j1 = bessel_j_seq(1, (2.0 * eta1).abs());
    let j2 = bessel_j_seq(1, (2.0 * eta2).abs());
    let s1 = if eta1 < 0.0 { -1.0 } else { 1.0 };
    let s2 = if eta2 < 0.0 { -1.0 } else { 1.0 };
    let (j01, j11) = (j1[0], s1 * j1[1]);
    let (j02, j12) = (j2[0], s2 * j2[1]);
    let pu = j01 * j12;
    let pv = j02 * j11;
    let n2 = (pu * pu - pv * pv).abs();
    if n2 <= DEGENERACY_TOL {
        return Err(Error::DegenerateDressing(n2));
    }
    let norm = n2.sqrt();
    let u = pu / norm;
    let v = pv / norm;
    let r = if u.abs() > v.abs() {
        (v / u).atanh()
    } else {
        (u / v).atanh()
    };
    Ok(DressedCoupling {
        u,
        v,
        r,
        g_tilde: g * norm,
        norm_n: norm,
    })
}

/// Small-amplitude planning estimates `(artanh(η1/η2), g√(η2² − η1²))`.
pub fn small_amplitude_estimates(eta1: f64, eta2: f64, g: f64) -> Result<(f64, f64)> {
    if !(0.0..=0.3).contains(&eta1) || !(0.0..=0.3).contains(&eta2) {
        return Err(Error::InvalidParameter(format!(
            "small-amplitude estimates need 0 <= eta <= 0.3 (got {eta1}, {eta2})"
        )));
    }
    if eta1 >= eta2 {
        return Err(Error::InvalidParameter(format!(
            "small-amplitude estimates need eta1 < eta2 (got {eta1} >= {eta2})"
        )));
    }
    let r = (eta1 / eta2).atanh();
    let g_tilde = g * (eta2 * eta2 - eta1 * eta1).sqrt();
    Ok((r, g_tilde))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Rotating,
    CounterRotating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceTerm {
    pub kind: TermKind,
    pub indices: (i32, i32),
    pub detuning: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub kept_terms: Vec<ResonanceTerm>,
    pub spurious_terms: Vec<ResonanceTerm>,
    pub threshold: f64,
}

impl ResonanceReport {
    pub fn first_spurious(&self, kind: TermKind) -> Option<&ResonanceTerm> {
        self.spurious_terms.iter().find(|t| t.kind == kind)
    }
}

const KEPT_ROTATING: (i32, i32) = (-1, 0);
const KEPT_COUNTER: (i32, i32) = (0, -1);

fn index_order(a: &(i32, i32)) -> (i32, i32, i32, i32) {
    (a.0.abs().max(a.1.abs()), a.0.abs() + a.1.abs(), a.0, a.1)
}

/// Scans index pairs for slow exponentials in α(t) and β(t).
///
/// Spurious terms are sorted by the largest index magnitude, so the first
/// entry of each kind is the lowest-order multi-photon resonance.
pub fn resonance_audit(params: &SystemParams, max_index: i32, g_threshold: f64) -> Result<ResonanceReport> {
    if max_index < 1 {
        return Err(Error::InvalidParameter(format!("max_index = {max_index}")));
    }
    let mi = max_index.min(MAX_ORDER);
    let w = params.omega;
    let e = params.epsilon;
    let b1: Vec<f64> = bessel_j_seq(mi as usize, 2.0 * params.eta1);
    let b2: Vec<f64> = bessel_j_seq(mi as usize, 2.0 * params.eta2);
    let jw = |b: &Vec<f64>, m: i32| b[m.unsigned_abs() as usize].abs();

    let mut kept = Vec::new();
    let mut spurious = Vec::new();
    for m1 in -mi..=mi {
        for m2 in -mi..=mi {
            let weight = jw(&b1, m1) * jw(&b2, m2);
            let rot = ((1 + m1 + m2) as f64 * w - (1 + m1 - m2) as f64 * e).abs();
            let cr = ((1 - m1 + m2) as f64 * w + (1 + m1 + m2) as f64 * e).abs();
            for (kind, det, kept_idx) in [
                (TermKind::Rotating, rot, KEPT_ROTATING),
                (TermKind::CounterRotating, cr, KEPT_COUNTER),
            ] {
                let term = ResonanceTerm {
                    kind,
                    indices: (m1, m2),
                    detuning: det,
                    weight,
                };
                if (m1, m2) == kept_idx {
                    kept.push(term);
                } else if det < g_threshold {
                    spurious.push(term);
                }
            }
        }
    }
    spurious.sort_by_key(|t| index_order(&t.indices));
    Ok(ResonanceReport {
        kept_terms: kept,
        spurious_terms: spurious,
        threshold: g_threshold,
    })
}

fn check_qubit_field(space: &HilbertSpace) -> Result<()> {
    if space.n_qubits() < 1 || !space.has_field() {
        return Err(Error::InvalidParameter(
            "Hamiltonian needs at least one qubit and a field mode".into(),
        ));
    }
    Ok(())
}

/// Lab-frame Hamiltonian `ω a†a + ε σz/2 + g(a + a†)σx + Σ Ωj ηj cos(Ωj t) σz`.
pub fn lab_frame_h(params: &SystemParams, space: HilbertSpace, t: f64) -> Result<Operator> {
    check_qubit_field(&space)?;
    let a = annihilation(space)?;
    let (_, sz, sx) = qubit_ops(space, 0)?;
    let n = &a.adjoint() * &a;
    let x = &a + &a.adjoint();
    let drive = params.drive1 * params.eta1 * (params.drive1 * t).cos()
        + params.drive2 * params.eta2 * (params.drive2 * t).cos();
    let h =
        &(&n.scaled_re(params.omega) + &sz.scaled_re(0.5 * params.epsilon + drive)) + &(&x * &sx).scaled_re(params.g);
    Operator::new_hermitian(space, h.hermitian_part().into_matrix())
}

/// Truncated Bessel sums `(α(t), β(t))` of the interaction picture.
pub fn alpha_beta(params: &SystemParams, t: f64, cutoff: usize) -> (c64, c64) {
    let j1 = bessel_j_seq(cutoff, 2.0 * params.eta1);
    let j2 = bessel_j_seq(cutoff, 2.0 * params.eta2);
    let series = |j: &[f64], freq: f64| -> c64 {
        let mut s = c64::new(j[0], 0.0);
        for (n, &jn) in j.iter().enumerate().skip(1) {
            // J_{-n} = (-1)^n J_n
            let jm = if n % 2 == 0 { jn } else { -jn };
            let ph = n as f64 * freq * t;
            s += c64::from_polar(jn, ph) + c64::from_polar(jm, -ph);
        }
        s
    };
    let b1 = series(&j1, params.drive1);
    let b2 = series(&j2, params.drive2);
    let alpha = c64::from_polar(1.0, -(params.omega - params.epsilon) * t) * b1 * b2;
    let beta = c64::from_polar(1.0, -(params.omega + params.epsilon) * t) * b1.conj() * b2.conj();
    (alpha, beta)
}

/// Operators `(a σ†, a σ)` for qubit 0, reused by time-dependent builders.
pub fn interaction_parts(space: HilbertSpace) -> Result<(Operator, Operator)> {
    check_qubit_field(&space)?;
    let a = annihilation(space)?;
    let (s, _, _) = qubit_ops(space, 0)?;
    Ok((&a * &s.adjoint(), &a * &s))
}

/// Assembles `g[α a σ† + β a σ] + h.c.` from precomputed parts.
pub fn interaction_from_parts(parts: &(Operator, Operator), g: f64, alpha: c64, beta: c64) -> Operator {
    let k = &parts.0.scaled(alpha * g) + &parts.1.scaled(beta * g);
    &k + &k.adjoint()
}

/// Interaction-picture Hamiltonian with Bessel sums cut at `|n| <= cutoff`.
pub fn interaction_picture_h(
    params: &SystemParams,
    space: HilbertSpace,
    t: f64,
    bessel_cutoff: usize,
) -> Result<Operator> {
    if bessel_cutoff < 1 {
        return Err(Error::InvalidParameter("bessel_cutoff must be >= 1".into()));
    }
    if bessel_cutoff > MAX_ORDER as usize {
        return Err(Error::BesselOrder(bessel_cutoff as i32));
    }
    let parts = interaction_parts(space)?;
    let (alpha, beta) = alpha_beta(params, t, bessel_cutoff);
    Ok(interaction_from_parts(&parts, params.g, alpha, beta))
}

/// `−g̃(u a† + v a)σ† + h.c.` for the given qubit.
pub fn dressed_interaction(dressed: &DressedCoupling, space: HilbertSpace, qubit: usize) -> Result<Operator> {
    check_qubit_field(&space)?;
    let a = annihilation(space)?;
    let (s, _, _) = qubit_ops(space, qubit)?;
    let mode = &a.adjoint().scaled_re(dressed.u) + &a.scaled_re(dressed.v);
    let k = (&mode * &s.adjoint()).scaled_re(-dressed.g_tilde);
    let h = &k + &k.adjoint();
    Operator::new_hermitian(space, h.into_matrix())
}

/// Effective time-independent Hamiltonian `−g̃(A†σ† + Aσ)`, `A = u a + v a†`,
/// written in the cavity Fock basis.
pub fn effective_h(dressed: &DressedCoupling, space: HilbertSpace) -> Result<Operator> {
    dressed_interaction(dressed, space, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{excited_projector, EXCITED, GROUND};
    use crate::linalg;

    #[test]
    fn single_drive_gives_pure_counter_rotating() {
        let d = dress(0.0, 0.2, 1.0).unwrap();
        assert_eq!(d.u, 1.0);
        assert_eq!(d.v, 0.0);
        assert_eq!(d.r, 0.0);
    }

    #[test]
    fn balanced_drives_are_degenerate() {
        assert!(matches!(dress(0.2, 0.2, 1.0), Err(Error::DegenerateDressing(_))));
    }

    #[test]
    fn swapping_amplitudes_swaps_u_and_v() {
        let a = dress(0.12, 0.21, 1.0).unwrap();
        let b = dress(0.21, 0.12, 1.0).unwrap();
        assert!((a.u - b.v).abs() < 1e-14);
        assert!((a.v - b.u).abs() < 1e-14);
        assert!((a.g_tilde - b.g_tilde).abs() < 1e-14);
        assert!(a.counter_rotating() && !b.counter_rotating());
    }

    #[test]
    fn small_amplitude_estimates_basics() {
        let (r, gt) = small_amplitude_estimates(0.0, 0.2, 1.0).unwrap();
        assert_eq!(r, 0.0);
        assert!((gt - 0.2).abs() < 1e-15);
        assert!(small_amplitude_estimates(0.2, 0.2, 1.0).is_err());
        assert!(small_amplitude_estimates(0.1, 0.4, 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        let p = SystemParams::sideband(4.5, 10.0, 0.04, 0.16, 0.2, 0.015, 3e-5);
        assert!(p.validate().is_ok());
        assert!(p.on_sidebands());
        let mut q = p.clone();
        q.epsilon = 4.0;
        assert!(q.validate().is_err());
        let mut q = p.clone();
        q.drive1 += 1e-3;
        assert!(!q.on_sidebands());
        assert!(q.dressed().is_err());
        let mut q = p;
        q.kappa = -1.0;
        assert!(q.validate().is_err());
    }

    #[test]
    fn kept_terms_have_zero_detuning() {
        let p = SystemParams::sideband(4.5, 10.0, 0.04, 0.16, 0.2, 0.015, 3e-5);
        let rep = resonance_audit(&p, 5, 0.04).unwrap();
        assert_eq!(rep.kept_terms.len(), 2);
        for t in &rep.kept_terms {
            assert_eq!(t.detuning, 0.0);
        }
        assert!(rep.spurious_terms.is_empty());
    }

    #[test]
    fn lab_frame_bare_spectrum() {
        let p = SystemParams::sideband(1.3, 3.1, 0.0, 0.0, 0.0, 0.0, 0.0);
        let s = HilbertSpace::new(1, 6).unwrap();
        let h = lab_frame_h(&p, s, 0.37).unwrap();
        let (vals, _) = linalg::eigh(h.matrix()).unwrap();
        let mut want: Vec<f64> = (0..6)
            .flat_map(|n| [n as f64 * 1.3 + 1.55, n as f64 * 1.3 - 1.55])
            .collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in vals.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lab_frame_ground_energy() {
        let p = SystemParams::sideband(1.3, 3.1, 0.05, 0.1, 0.2, 0.0, 0.0);
        let s = HilbertSpace::new(1, 4).unwrap();
        let t = 0.81;
        let h = lab_frame_h(&p, s, t).unwrap();
        let i = s.index(&[GROUND], 0).unwrap();
        let want = -1.55 - p.drive1 * 0.1 * (p.drive1 * t).cos() - p.drive2 * 0.2 * (p.drive2 * t).cos();
        assert!((h.get(i, i).re - want).abs() < 1e-12);
    }

    #[test]
    fn undriven_interaction_picture_phases() {
        let p = SystemParams::sideband(1.3, 3.1, 0.05, 0.0, 0.0, 0.0, 0.0);
        let t = 2.2;
        let (a, b) = alpha_beta(&p, t, 8);
        assert!((a - c64::from_polar(1.0, -(1.3 - 3.1) * t)).norm() < 1e-14);
        assert!((b - c64::from_polar(1.0, -(1.3 + 3.1) * t)).norm() < 1e-14);
    }

    #[test]
    fn effective_matrix_element() {
        let d = dress(0.16, 0.2, 1.0).unwrap();
        let s = HilbertSpace::new(1, 8).unwrap();
        let h = effective_h(&d, s).unwrap();
        for n in 0..7 {
            let i = s.index(&[EXCITED], n).unwrap();
            let j = s.index(&[GROUND], n + 1).unwrap();
            let want = -d.g_tilde * d.v * ((n + 1) as f64).sqrt();
            assert!((h.get(i, j).re - want).abs() < 1e-14);
        }
    }

    #[test]
    fn effective_h_conserves_excitations_of_mode_a() {
        let d = dress(0.16, 0.2, 1.0).unwrap();
        let n = 30;
        let s = HilbertSpace::new(1, n).unwrap();
        let h = effective_h(&d, s).unwrap();
        let a = annihilation(s).unwrap();
        let big_a = &a.scaled_re(d.u) + &a.adjoint().scaled_re(d.v);
        let g = &(&big_a.adjoint() * &big_a) - &excited_projector(s, 0).unwrap();
        let c = crate::fock::commutator(&h, &g).unwrap();
        for q in 0..2 {
            for m in 0..n - 4 {
                for q2 in 0..2 {
                    for m2 in 0..n - 4 {
                        assert!(c.get(q * n + m, q2 * n + m2).norm() < 1e-10);
                    }
                }
            }
        }
    }
}
