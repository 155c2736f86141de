use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Col, Mat};
use log::debug;

use super::{unvectorize, vectorize, Hamiltonian, MasterEquation};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, HilbertSpace, GROUND};
use crate::linalg::CMat;
use crate::ode::{Integrator, OdeOptions};

/// Largest superoperator dimension for which `to_dense` is allowed.
pub const DENSE_LIMIT: usize = 4096;
/// Largest superoperator dimension for the dense singular-value degeneracy
/// check.
const SVD_LIMIT: usize = 1600;
// chunks without halving |L rho| before the integration counts as stalled
const STALL_CHUNKS: usize = 5;
// a stall this close to rhs_tol is the integrator's noise floor
const PLATEAU_FACTOR: f64 = 100.0;
const MAX_CHUNK: f64 = 1e3;
/// Largest superoperator dimension for the second bordered solve used as a
/// uniqueness check on bigger systems.
const BORDER_CHECK_LIMIT: usize = 40_000;
const DEGENERACY_GAP: f64 = 1e-8;

/// Sparse superoperator acting on column-major `vec(ρ)`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    space: HilbertSpace,
    matrix: SparseColMat<usize, c64>,
}

type Trip = Triplet<usize, usize, c64>;

fn nonzeros(m: &CMat) -> Vec<(usize, usize, c64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                out.push((i, j, z));
            }
        }
    }
    out
}

fn triplets(me: &MasterEquation) -> Result<Vec<Trip>> {
    let h = match me.hamiltonian() {
        Hamiltonian::Static(h) => h.clone(),
        Hamiltonian::TimeDependent(_) => {
            return Err(Error::InvalidParameter(
                "Liouvillian requires a time-independent Hamiltonian".into(),
            ))
        }
    };
    let d = me.space().dim();
    let mut heff = h.matrix().clone();
    for t in me.terms() {
        let o = t.jump().matrix();
        let k = o.adjoint() * o;
        for j in 0..d {
            for i in 0..d {
                heff[(i, j)] -= c64::new(0.0, t.rate()) * k[(i, j)];
            }
        }
    }
    let hz = nonzeros(&heff);
    let mut out = Vec::with_capacity(2 * hz.len() * d);
    let mi = c64::new(0.0, -1.0);
    let pi = c64::new(0.0, 1.0);
    // vec(AρB) = (Bᵀ ⊗ A) vec(ρ), (X ⊗ Y)[q + p d, s + r d] = X[p, r] Y[q, s]
    for &(q, s, z) in &hz {
        for p in 0..d {
            out.push(Triplet::new(q + p * d, s + p * d, mi * z));
        }
    }
    for &(p, r, z) in &hz {
        // right multiplication by Heff†: X = conj(Heff)
        for q in 0..d {
            out.push(Triplet::new(q + p * d, q + r * d, pi * z.conj()));
        }
    }
    for t in me.terms() {
        if t.rate() == 0.0 {
            continue;
        }
        let oz = nonzeros(t.jump().matrix());
        let w = 2.0 * t.rate();
        for &(p, r, x) in &oz {
            let xc = x.conj() * w;
            for &(q, s, y) in &oz {
                out.push(Triplet::new(q + p * d, s + r * d, xc * y));
            }
        }
    }
    Ok(out)
}

/// Sparse Liouvillian of a time-independent master equation.
pub fn liouvillian_matrix(me: &MasterEquation) -> Result<Liouvillian> {
    let n = me.space().dim().pow(2);
    let t = triplets(me)?;
    let matrix = SparseColMat::try_new_from_triplets(n, n, &t).map_err(|e| Error::Linalg(format!("{e:?}")))?;
    Ok(Liouvillian {
        space: me.space(),
        matrix,
    })
}

impl Liouvillian {
    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.compute_nnz()
    }

    pub fn matrix(&self) -> &SparseColMat<usize, c64> {
        &self.matrix
    }

    pub fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        y.iter_mut().for_each(|v| *v = c64::new(0.0, 0.0));
        let m = self.matrix.as_ref();
        let cp = m.col_ptr();
        let ri = m.row_idx();
        let vals = m.val();
        for (j, &xj) in x.iter().enumerate() {
            if xj.re == 0.0 && xj.im == 0.0 {
                continue;
            }
            for k in cp[j]..cp[j + 1] {
                y[ri[k]] += vals[k] * xj;
            }
        }
    }

    pub fn apply(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![c64::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    /// `L ρ` reshaped back to a matrix.
    pub fn apply_matrix(&self, rho: &CMat) -> CMat {
        unvectorize(&self.apply(&vectorize(rho)), self.space.dim())
    }

    pub fn to_dense(&self) -> Result<CMat> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "dense Liouvillian of dimension {n} exceeds limit {DENSE_LIMIT}"
            )));
        }
        let mut out = Mat::zeros(n, n);
        let m = self.matrix.as_ref();
        let cp = m.col_ptr();
        let ri = m.row_idx();
        let vals = m.val();
        for j in 0..n {
            for k in cp[j]..cp[j + 1] {
                out[(ri[k], j)] += vals[k];
            }
        }
        Ok(out)
    }

    /// Largest deviation of `tr(L X)` from zero over basis inputs, i.e. how
    /// far the trace row is from being a left null vector.
    pub fn trace_leak(&self) -> f64 {
        let d = self.space.dim();
        let m = self.matrix.as_ref();
        let cp = m.col_ptr();
        let ri = m.row_idx();
        let vals = m.val();
        let mut worst = 0.0f64;
        for j in 0..self.dim() {
            let mut s = c64::new(0.0, 0.0);
            for k in cp[j]..cp[j + 1] {
                let r = ri[k];
                if r % d == r / d {
                    s += vals[k];
                }
            }
            worst = worst.max(s.norm());
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SteadyStateMethod {
    Direct,
    Evolve,
}

#[derive(Clone, Debug)]
pub struct SteadyStateOptions {
    pub method: SteadyStateMethod,
    pub ode: OdeOptions,
    /// Frobenius norm of `L ρ` at which long-time integration stops.
    pub rhs_tol: f64,
    pub max_time: f64,
    pub initial: Option<DensityMatrix>,
    pub check_uniqueness: bool,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            method: SteadyStateMethod::Direct,
            // the residual floor of an explicit integrator is about atol times |L|
            ode: OdeOptions::with_tolerances(1e-13, 1e-11),
            rhs_tol: 1e-10,
            max_time: 1e7,
            initial: None,
            check_uniqueness: true,
        }
    }
}

/// Unique stationary state of a time-independent generator.
pub fn steady_state(me: &MasterEquation, method: SteadyStateMethod) -> Result<DensityMatrix> {
    steady_state_with(
        me,
        &SteadyStateOptions {
            method,
            ..SteadyStateOptions::default()
        },
    )
}

pub fn steady_state_with(me: &MasterEquation, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    let l = liouvillian_matrix(me)?;
    match opts.method {
        SteadyStateMethod::Direct => direct(me, &l, opts.check_uniqueness),
        SteadyStateMethod::Evolve => evolve_to_rest(me, &l, opts),
    }
}

fn bordered_solve(me: &MasterEquation, border_row: usize) -> Result<Vec<c64>> {
    let d = me.space().dim();
    let n = d * d;
    let mut t = triplets(me)?;
    t.retain(|x| x.row != border_row);
    for i in 0..d {
        t.push(Triplet::new(border_row, i + i * d, c64::new(1.0, 0.0)));
    }
    let m = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &t).map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let lu = m
        .sp_lu()
        .map_err(|e| Error::MultipleSteadyStates(format!("bordered system is singular ({e:?})")))?;
    let mut b = Col::<c64>::zeros(n);
    b[border_row] = c64::new(1.0, 0.0);
    let x = lu.solve(&b);
    let v: Vec<c64> = (0..n).map(|i| x[i]).collect();
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::MultipleSteadyStates(
            "bordered solve produced non-finite values".into(),
        ));
    }
    Ok(v)
}

fn to_state(me: &MasterEquation, v: &[c64]) -> Result<DensityMatrix> {
    DensityMatrix::from_raw(me.space(), unvectorize(v, me.space().dim()))
}

fn direct(me: &MasterEquation, l: &Liouvillian, check: bool) -> Result<DensityMatrix> {
    let d = me.space().dim();
    let n = d * d;
    if check && n <= SVD_LIMIT {
        let sv = l
            .to_dense()?
            .singular_values()
            .map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let top = sv[0].max(f64::MIN_POSITIVE);
        let second = sv[n.saturating_sub(2)];
        if n >= 2 && second / top < DEGENERACY_GAP {
            return Err(Error::MultipleSteadyStates(format!(
                "second smallest singular value {:.3e} (relative {:.3e})",
                second,
                second / top
            )));
        }
    }
    let x = bordered_solve(me, 0)?;
    let residual = linalg_norm(&l.apply(&x));
    let scale = linalg_norm(&x).max(1.0);
    debug!(
        "direct steady state: dimension {n}, nnz {}, residual {residual:.3e}",
        l.nnz()
    );
    if !(residual <= 1e-8 * scale) {
        return Err(Error::MultipleSteadyStates(format!(
            "bordered solution has residual {residual:.3e}"
        )));
    }
    let rho = to_state(me, &x)?;
    if check && n > SVD_LIMIT && n <= BORDER_CHECK_LIMIT && d > 1 {
        let alt = to_state(me, &bordered_solve(me, (d - 1) + (d - 1) * d)?)?;
        let dist = super::trace_distance(&rho, &alt)?;
        if dist > 1e-6 {
            return Err(Error::MultipleSteadyStates(format!(
                "bordered solves disagree by {dist:.3e} in trace distance"
            )));
        }
    }
    Ok(rho)
}

fn linalg_norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn evolve_to_rest(me: &MasterEquation, l: &Liouvillian, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    let space = me.space();
    let d = space.dim();
    let rho0 = match &opts.initial {
        Some(r) => {
            if r.space() != space {
                return Err(Error::DimensionMismatch("initial state space differs".into()));
            }
            r.clone()
        }
        None => {
            let ground = vec![GROUND; space.n_qubits()];
            DensityMatrix::basis(space, space.index(&ground, 0)?)?
        }
    };
    let mut f = |_t: f64, y: &[c64], dy: &mut [c64]| {
        l.apply_into(y, dy);
        Ok(())
    };
    let mut it = Integrator::new(0.0, vectorize(rho0.matrix()), opts.ode.clone());
    let mut chunk = 1.0;
    let (mut best, mut stale) = (f64::INFINITY, 0);
    loop {
        let norm = linalg_norm(it.derivative(&mut f)?);
        if norm <= opts.rhs_tol {
            debug!(
                "evolve steady state reached at t = {:.3e} after {} steps",
                it.t(),
                it.steps()
            );
            break;
        }
        if it.t() >= opts.max_time {
            return Err(Error::InvalidState(format!(
                "no stationary state within t = {} (|L rho| = {norm:.3e})",
                opts.max_time
            )));
        }
        if norm < 0.5 * best {
            best = norm;
            stale = 0;
        } else {
            stale += 1;
            if stale >= STALL_CHUNKS && best <= PLATEAU_FACTOR * opts.rhs_tol {
                debug!("evolve: |L rho| plateau at {best:.3e}, t = {:.3e}", it.t());
                break;
            }
            if stale >= STALL_CHUNKS && chunk >= MAX_CHUNK {
                return Err(Error::InvalidState(format!(
                    "|L rho| stalled at {best:.3e} above {:.1e}; tighten the integrator tolerances",
                    opts.rhs_tol
                )));
            }
        }
        let target = (it.t() + chunk).min(opts.max_time);
        it.advance_to(target, &mut f)?;
        chunk = (chunk * 1.5).min(MAX_CHUNK);
    }
    let y = it.into_state();
    if y.len() != d * d {
        return Err(Error::DimensionMismatch("state length".into()));
    }
    to_state(me, &y)
}
