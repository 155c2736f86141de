//! Lindblad master equations: generators, propagation, Liouvillians, steady
//! states, model builders and state comparisons.

mod liouvillian;
mod measures;
mod models;

use std::fmt;
use std::sync::Arc;

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, HilbertSpace, Operator, HERMITIAN_TOL};
use crate::linalg::{self, CMat};
use crate::ode::{Integrator, OdeOptions};

pub use liouvillian::{
    liouvillian_matrix, steady_state, steady_state_with, Liouvillian, SteadyStateMethod, SteadyStateOptions,
};
pub use measures::{fidelity, partial_trace, reduced_field, trace_distance, Factor};
pub use models::{
    adiabatic_elimination_valid, mode_a_in_a_basis, model_pumped_laser, model_single_qubit_laser,
    model_squeezed_laser_effective, model_two_qubit_full,
};

/// Jump operator `O` with rate `Γ`, entering as `Γ(2OρO† − O†Oρ − ρO†O)`.
#[derive(Clone, Debug)]
pub struct LindbladTerm {
    jump: Operator,
    rate: f64,
}

impl LindbladTerm {
    pub fn new(jump: Operator, rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Lindblad rate must be finite and non-negative (got {rate})"
            )));
        }
        Ok(Self { jump, rate })
    }

    pub fn jump(&self) -> &Operator {
        &self.jump
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

type HamiltonianFn = dyn Fn(f64) -> Result<Operator> + Send + Sync;

#[derive(Clone)]
pub enum Hamiltonian {
    Static(Operator),
    TimeDependent(Arc<HamiltonianFn>),
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hamiltonian::Static(h) => f.debug_tuple("Static").field(&h.space()).finish(),
            Hamiltonian::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MasterEquation {
    space: HilbertSpace,
    hamiltonian: Hamiltonian,
    terms: Vec<LindbladTerm>,
}

fn check_hermitian(h: &Operator) -> Result<()> {
    let dev = h.hermitian_deviation();
    let scale = linalg::max_abs(h.matrix()).max(1.0);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

impl MasterEquation {
    pub fn new(space: HilbertSpace, hamiltonian: Hamiltonian, terms: Vec<LindbladTerm>) -> Result<Self> {
        if let Hamiltonian::Static(h) = &hamiltonian {
            if h.space() != space {
                return Err(Error::DimensionMismatch("Hamiltonian space differs".into()));
            }
            check_hermitian(h)?;
        }
        for t in &terms {
            if t.jump.space() != space {
                return Err(Error::DimensionMismatch("jump operator space differs".into()));
            }
        }
        Ok(Self {
            space,
            hamiltonian,
            terms,
        })
    }

    pub fn with_static(h: Operator, terms: Vec<LindbladTerm>) -> Result<Self> {
        Self::new(h.space(), Hamiltonian::Static(h), terms)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn terms(&self) -> &[LindbladTerm] {
        &self.terms
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self.hamiltonian, Hamiltonian::TimeDependent(_))
    }

    /// Hamiltonian at time `t`, verified Hermitian.
    pub fn hamiltonian_at(&self, t: f64) -> Result<Operator> {
        match &self.hamiltonian {
            Hamiltonian::Static(h) => Ok(h.clone()),
            Hamiltonian::TimeDependent(f) => {
                let h = f(t)?;
                if h.space() != self.space {
                    return Err(Error::DimensionMismatch("Hamiltonian space differs".into()));
                }
                check_hermitian(&h)?;
                Ok(h)
            }
        }
    }
}

/// Precomputed dense pieces of the generator for a fixed Hamiltonian.
struct DenseGenerator {
    heff: CMat,
    jumps: Vec<(CMat, CMat, f64)>,
}

impl DenseGenerator {
    fn new(me: &MasterEquation, h: &Operator) -> Self {
        let d = me.space.dim();
        let mut heff = h.matrix().clone();
        let mut jumps = Vec::with_capacity(me.terms.len());
        for t in &me.terms {
            let o = t.jump.matrix();
            let od = o.adjoint().to_owned();
            let k = &od * o;
            for j in 0..d {
                for i in 0..d {
                    heff[(i, j)] -= c64::new(0.0, t.rate) * k[(i, j)];
                }
            }
            jumps.push((o.clone(), od, t.rate));
        }
        Self { heff, jumps }
    }

    fn apply(&self, rho: &CMat) -> CMat {
        let mi = c64::new(0.0, -1.0);
        let a = &self.heff * rho;
        let b = rho * self.heff.adjoint();
        let d = rho.nrows();
        let mut out = Mat::from_fn(d, d, |i, j| mi * (a[(i, j)] - b[(i, j)]));
        for (o, od, rate) in &self.jumps {
            let t = &(o * rho) * od;
            for j in 0..d {
                for i in 0..d {
                    out[(i, j)] += t[(i, j)] * (2.0 * rate);
                }
            }
        }
        out
    }
}

/// Single dissipator `Γ(2OρO† − O†Oρ − ρO†O)`.
pub fn dissipator(term: &LindbladTerm, rho: &DensityMatrix) -> Result<CMat> {
    if term.jump.space() != rho.space() {
        return Err(Error::DimensionMismatch("jump operator and state spaces differ".into()));
    }
    let o = term.jump.matrix();
    let od = o.adjoint().to_owned();
    let k = &od * o;
    let r = rho.matrix();
    let a = &(o * r) * &od;
    let b = &k * r;
    let c = r * &k;
    let g = term.rate;
    Ok(Mat::from_fn(r.nrows(), r.ncols(), |i, j| {
        (a[(i, j)] * 2.0 - b[(i, j)] - c[(i, j)]) * g
    }))
}

/// `ρ̇ = −i[H(t), ρ] + Σ L_{O,Γ}[ρ]` on an arbitrary matrix.
pub fn rhs_matrix(me: &MasterEquation, rho: &CMat, t: f64) -> Result<CMat> {
    let d = me.space.dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch("state dimension differs".into()));
    }
    if !linalg::all_finite(rho) {
        return Err(Error::NonFinite("master-equation input"));
    }
    let h = me.hamiltonian_at(t)?;
    let out = DenseGenerator::new(me, &h).apply(rho);
    if !linalg::all_finite(&out) {
        return Err(Error::NonFinite("master-equation right-hand side"));
    }
    Ok(out)
}

/// Right-hand side of the master equation at time `t`.
pub fn rhs(me: &MasterEquation, rho: &DensityMatrix, t: f64) -> Result<CMat> {
    if rho.space() != me.space {
        return Err(Error::DimensionMismatch("state and generator spaces differ".into()));
    }
    rhs_matrix(me, rho.matrix(), t)
}

/// Column-major vectorization, `vec(ρ)[i + j d] = ρ_ij`.
pub fn vectorize(m: &CMat) -> Vec<c64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * m.ncols());
    for j in 0..m.ncols() {
        for i in 0..d {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[c64], d: usize) -> CMat {
    Mat::from_fn(d, d, |i, j| v[i + j * d])
}

/// Stored trajectory of an integration.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

/// Drift allowed in trace and Hermiticity between accepted steps.
const STEP_DRIFT_TOL: f64 = 1e-8;

fn check_step(y: &[c64], d: usize, t: f64) -> Result<()> {
    let mut tr = c64::new(0.0, 0.0);
    let mut dev = 0.0f64;
    for j in 0..d {
        tr += y[j + j * d];
        for i in 0..j {
            dev = dev.max((y[i + j * d] - y[j + i * d].conj()).norm());
        }
    }
    if (tr - c64::new(1.0, 0.0)).norm() > STEP_DRIFT_TOL || dev > STEP_DRIFT_TOL {
        return Err(Error::InvalidState(format!(
            "trajectory lost trace or Hermiticity at t = {t} (trace {:.3e}, deviation {dev:.3e})",
            tr.re
        )));
    }
    Ok(())
}

/// Integrates the master equation and stores the state at each of `times`.
///
/// Static generators use the sparse Liouvillian; time-dependent ones are
/// applied densely.
pub fn evolve(me: &MasterEquation, rho0: &DensityMatrix, times: &[f64], opts: &OdeOptions) -> Result<Trajectory> {
    if rho0.space() != me.space {
        return Err(Error::DimensionMismatch(
            "initial state and generator spaces differ".into(),
        ));
    }
    rho0.validate()?;
    let d = me.space.dim();
    let y0 = vectorize(rho0.matrix());
    let mut it = Integrator::new(0.0, y0, opts.clone());
    let mut out = Trajectory {
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
    };
    let mut on_accept = |t: f64, y: &[c64]| check_step(y, d, t);
    let store = |t: f64, y: &[c64], out: &mut Trajectory| -> Result<()> {
        let rho = DensityMatrix::from_raw(me.space, unvectorize(y, d))?;
        out.times.push(t);
        out.states.push(rho);
        Ok(())
    };
    match &me.hamiltonian {
        Hamiltonian::Static(_) => {
            let l = liouvillian_matrix(me)?;
            let mut f = |_t: f64, y: &[c64], dy: &mut [c64]| {
                l.apply_into(y, dy);
                Ok(())
            };
            for &t in times {
                it.advance_to_with(t, &mut f, &mut on_accept)?;
                store(t, it.y(), &mut out)?;
            }
        }
        Hamiltonian::TimeDependent(_) => {
            let mut f = |t: f64, y: &[c64], dy: &mut [c64]| {
                let h = me.hamiltonian_at(t)?;
                let r = DenseGenerator::new(me, &h).apply(&unvectorize(y, d));
                dy.copy_from_slice(&vectorize(&r));
                Ok(())
            };
            for &t in times {
                it.advance_to_with(t, &mut f, &mut on_accept)?;
                store(t, it.y(), &mut out)?;
            }
        }
    }
    Ok(out)
}

/// Schrödinger evolution `ψ̇ = −i H(t) ψ`, returning normalized states at
/// each of `times`.
pub fn evolve_pure<H>(hamiltonian: H, psi0: &[c64], times: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<c64>>>
where
    H: Fn(f64) -> Result<Operator>,
{
    let mut f = |t: f64, y: &[c64], dy: &mut [c64]| {
        let h = hamiltonian(t)?;
        let hy = h.apply(y)?;
        for (d, v) in dy.iter_mut().zip(hy) {
            *d = c64::new(v.im, -v.re);
        }
        Ok(())
    };
    let mut it = Integrator::new(0.0, psi0.to_vec(), opts.clone());
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        it.advance_to(t, &mut f)?;
        let y = it.y();
        let n: f64 = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        out.push(y.iter().map(|z| z / n).collect());
    }
    Ok(out)
}
