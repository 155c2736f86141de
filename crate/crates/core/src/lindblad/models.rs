use log::warn;

use super::{LindbladTerm, MasterEquation};
use crate::dressing::DressedCoupling;
use crate::error::{Error, Result};
use crate::fock::{annihilation, qubit_ops, HilbertSpace, Operator};

fn require_qubits(space: &HilbertSpace, n: usize) -> Result<()> {
    if space.n_qubits() != n || !space.has_field() {
        return Err(Error::InvalidParameter(format!(
            "model needs {n} qubit(s) and a field mode, got {:?}",
            space
        )));
    }
    Ok(())
}

fn check_rates(rates: &[(&str, f64)]) -> Result<()> {
    for &(name, x) in rates {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidParameter(format!("{name} = {x}")));
        }
    }
    Ok(())
}

/// Counter-rotating coupling `−g(X†σ† + Xσ)` between mode `x` and qubit `q`.
fn counter_rotating(space: HilbertSpace, x: &Operator, q: usize, g: f64) -> Result<Operator> {
    let (s, _, _) = qubit_ops(space, q)?;
    let k = (&x.adjoint() * &s.adjoint()).scaled_re(-g);
    Operator::new_hermitian(space, (&k + &k.adjoint()).into_matrix())
}

/// Single-qubit laser: `ρ̇ = ig[a†σ† + aσ, ρ] + L_{σ,γ} + L_{a,κ}`.
pub fn model_single_qubit_laser(g: f64, gamma: f64, kappa: f64, space: HilbertSpace) -> Result<MasterEquation> {
    require_qubits(&space, 1)?;
    check_rates(&[("gamma", gamma), ("kappa", kappa)])?;
    let a = annihilation(space)?;
    let (s, _, _) = qubit_ops(space, 0)?;
    let h = counter_rotating(space, &a, 0, g)?;
    MasterEquation::with_static(h, vec![LindbladTerm::new(s, gamma)?, LindbladTerm::new(a, kappa)?])
}

/// Co-rotating laser with incoherent pumping `L_{σ†,p}`, the image of the
/// single-qubit laser under `σ ↔ σ†`.
pub fn model_pumped_laser(g: f64, pump: f64, kappa: f64, space: HilbertSpace) -> Result<MasterEquation> {
    require_qubits(&space, 1)?;
    check_rates(&[("pump", pump), ("kappa", kappa)])?;
    let a = annihilation(space)?;
    let (s, _, _) = qubit_ops(space, 0)?;
    let k = (&a.adjoint() * &s).scaled_re(-g);
    let h = Operator::new_hermitian(space, (&k + &k.adjoint()).into_matrix())?;
    MasterEquation::with_static(
        h,
        vec![LindbladTerm::new(s.adjoint(), pump)?, LindbladTerm::new(a, kappa)?],
    )
}

/// Cavity operator `a = uA − vA†` in the Fock basis of mode `A`.
pub fn mode_a_in_a_basis(dressed: &DressedCoupling, space: HilbertSpace) -> Result<Operator> {
    let big_a = annihilation(space)?;
    Ok(&big_a.scaled_re(dressed.u) - &big_a.adjoint().scaled_re(dressed.v))
}

fn require_counter_rotating(dressed: &DressedCoupling) -> Result<()> {
    if !dressed.counter_rotating() {
        return Err(Error::InvalidParameter("lasing qubit needs |u| > |v|".into()));
    }
    Ok(())
}

/// Engineered-dissipation laser in the Fock basis of mode A:
/// `ρ̇ = ig̃[A†σ† + Aσ, ρ] + L_{σ,γ} + L_{a,κ} + L_{A,κC̃′}`.
pub fn model_squeezed_laser_effective(
    dressed: &DressedCoupling,
    gamma: f64,
    kappa: f64,
    c_prime: f64,
    space: HilbertSpace,
) -> Result<MasterEquation> {
    require_qubits(&space, 1)?;
    require_counter_rotating(dressed)?;
    check_rates(&[("gamma", gamma), ("kappa", kappa), ("C'", c_prime)])?;
    let big_a = annihilation(space)?;
    let (s, _, _) = qubit_ops(space, 0)?;
    let h = counter_rotating(space, &big_a, 0, dressed.g_tilde)?;
    let a = mode_a_in_a_basis(dressed, space)?;
    let mut terms = vec![LindbladTerm::new(s, gamma)?, LindbladTerm::new(a, kappa)?];
    if c_prime > 0.0 {
        terms.push(LindbladTerm::new(big_a, kappa * c_prime)?);
    }
    MasterEquation::with_static(h, terms)
}

/// Both qubits without adiabatic elimination, field in the mode-A basis.
///
/// The auxiliary coupling is built from `dressed_aux` as
/// `−g̃′(u′a† + v′a)σ′† + h.c.`; with swapped drive amplitudes this is the
/// rotating form `−g̃′(Aσ′† + A†σ′)`.
pub fn model_two_qubit_full(
    dressed: &DressedCoupling,
    dressed_aux: &DressedCoupling,
    gamma: f64,
    gamma_prime: f64,
    kappa: f64,
    space: HilbertSpace,
) -> Result<MasterEquation> {
    require_qubits(&space, 2)?;
    require_counter_rotating(dressed)?;
    check_rates(&[("gamma", gamma), ("gamma_prime", gamma_prime), ("kappa", kappa)])?;
    let big_a = annihilation(space)?;
    let (s1, _, _) = qubit_ops(space, 0)?;
    let (s2, _, _) = qubit_ops(space, 1)?;
    let a = mode_a_in_a_basis(dressed, space)?;
    let h1 = counter_rotating(space, &big_a, 0, dressed.g_tilde)?;
    let mode_aux = &a.adjoint().scaled_re(dressed_aux.u) + &a.scaled_re(dressed_aux.v);
    let k = (&mode_aux * &s2.adjoint()).scaled_re(-dressed_aux.g_tilde);
    let h2 = &k + &k.adjoint();
    let h = Operator::new_hermitian(space, (&h1 + &h2).hermitian_part().into_matrix())?;
    MasterEquation::with_static(
        h,
        vec![
            LindbladTerm::new(s1, gamma)?,
            LindbladTerm::new(s2, gamma_prime)?,
            LindbladTerm::new(a, kappa)?,
        ],
    )
}

/// Adiabatic-elimination validity `γ′ >= 10 g̃′ √⟨n⟩`; logged, not enforced.
pub fn adiabatic_elimination_valid(g_tilde_aux: f64, gamma_prime: f64, mean_photons: f64) -> bool {
    let ok = gamma_prime >= 10.0 * g_tilde_aux * mean_photons.max(0.0).sqrt();
    if !ok {
        warn!(
            "auxiliary qubit not fast enough for adiabatic elimination: gamma' = {gamma_prime}, g' sqrt(n) = {}",
            g_tilde_aux * mean_photons.max(0.0).sqrt()
        );
    }
    ok
}
