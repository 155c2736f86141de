//! Truncated Fock-space and qubit operator algebra.
//!
//! Basis ordering is fixed to `|qubit1> ⊗ |qubit2> ⊗ |n>` with the excited
//! qubit state `|e>` at index 0 and `|g>` at index 1.

use faer::{c64, Mat, Side};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Hermiticity tolerance for constructed operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace and Hermiticity tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Allowed negative eigenvalue slack for density matrices.
pub const EIGEN_SLACK: f64 = 1e-8;
/// Maximum population tolerated in the top 10% of Fock levels.
pub const TAIL_TOL: f64 = 1e-6;

/// Index of the excited qubit state.
pub const EXCITED: usize = 0;
/// Index of the ground qubit state.
pub const GROUND: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    n_qubits: usize,
    field_dim: usize,
}

impl HilbertSpace {
    pub fn new(n_qubits: usize, field_dim: usize) -> Result<Self> {
        if n_qubits > 2 {
            return Err(Error::InvalidParameter(format!(
                "n_qubits must be 0, 1 or 2 (got {n_qubits})"
            )));
        }
        if field_dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "field_dim must be at least 2 (got {field_dim})"
            )));
        }
        Ok(Self { n_qubits, field_dim })
    }

    /// Field mode only.
    pub fn field(field_dim: usize) -> Result<Self> {
        Self::new(0, field_dim)
    }

    /// Qubit factors without a cavity mode (field factor of dimension 1).
    pub fn qubits_only(n_qubits: usize) -> Result<Self> {
        if !(1..=2).contains(&n_qubits) {
            return Err(Error::InvalidParameter(format!(
                "qubit-only space needs 1 or 2 qubits (got {n_qubits})"
            )));
        }
        Ok(Self { n_qubits, field_dim: 1 })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.field_dim
    }

    pub fn has_field(&self) -> bool {
        self.field_dim > 1
    }

    /// Same qubit content with a different Fock truncation.
    pub fn with_field_dim(&self, field_dim: usize) -> Result<Self> {
        Self::new(self.n_qubits, field_dim)
    }

    /// Linear index of a basis state; `qubits[k]` is `EXCITED` or `GROUND`.
    pub fn index(&self, qubits: &[usize], n: usize) -> Result<usize> {
        if qubits.len() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "expected {} qubit labels, got {}",
                self.n_qubits,
                qubits.len()
            )));
        }
        let mut q = 0;
        for &s in qubits {
            if s > 1 {
                return Err(Error::IndexOutOfRange { index: s, limit: 2 });
            }
            q = 2 * q + s;
        }
        if n >= self.field_dim {
            return Err(Error::IndexOutOfRange {
                index: n,
                limit: self.field_dim,
            });
        }
        Ok(q * self.field_dim + n)
    }

    /// Tensor composition `self ⊗ other` respecting the fixed ordering.
    pub fn compose(&self, other: &HilbertSpace) -> Result<HilbertSpace> {
        if self.field_dim != 1 {
            return Err(Error::DimensionMismatch(
                "left factor of a tensor product must be a pure qubit space".into(),
            ));
        }
        let n_qubits = self.n_qubits + other.n_qubits;
        if n_qubits > 2 {
            return Err(Error::DimensionMismatch(format!(
                "tensor product would hold {n_qubits} qubits"
            )));
        }
        Ok(HilbertSpace {
            n_qubits,
            field_dim: other.field_dim,
        })
    }
}

/// Dense operator on a [`HilbertSpace`].
#[derive(Clone, Debug)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMat,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMat) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, space has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    /// Builds an operator and verifies the claimed Hermiticity.
    pub fn new_hermitian(space: HilbertSpace, matrix: CMat) -> Result<Self> {
        let op = Self::new(space, matrix)?;
        let dev = op.hermitian_deviation();
        if dev > HERMITIAN_TOL * op.scale().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(op)
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: Mat::identity(d, d),
        }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: Mat::zeros(d, d),
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.matrix[(i, j)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            space: self.space,
            matrix: self.matrix.adjoint().to_owned(),
        }
    }

    pub fn hermitian_deviation(&self) -> f64 {
        linalg::hermitian_deviation(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    fn scale(&self) -> f64 {
        linalg::max_abs(&self.matrix)
    }

    pub fn trace(&self) -> c64 {
        linalg::trace(&self.matrix)
    }

    pub fn scaled(&self, s: c64) -> Operator {
        Operator {
            space: self.space,
            matrix: linalg::scale(&self.matrix, s),
        }
    }

    pub fn scaled_re(&self, s: f64) -> Operator {
        self.scaled(c64::new(s, 0.0))
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch(format!(
                "operator spaces differ: {:?} vs {:?}",
                self.space, other.space
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Operator {
            space: self.space,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Operator {
            space: self.space,
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Operator {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Hermitian part `(M + M†)/2`, used to scrub roundoff.
    pub fn hermitian_part(&self) -> Operator {
        Operator {
            space: self.space,
            matrix: linalg::hermitian_part(&self.matrix),
        }
    }

    /// Applies the operator to a state vector.
    pub fn apply(&self, psi: &[c64]) -> Result<Vec<c64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has length {}, operator dimension {}",
                psi.len(),
                self.dim()
            )));
        }
        Ok(linalg::matvec(&self.matrix, psi))
    }
}

// Operator arithmetic for builders. Mixing spaces is a programming error and
// panics; use the `try_*` methods on untrusted input.
impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator spaces differ")
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator spaces differ")
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator spaces differ")
    }
}

/// Density matrix satisfying trace, Hermiticity and positivity checks.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: CMat,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: CMat) -> Result<Self> {
        let op = Operator::new(space, matrix)?;
        let rho = Self {
            space,
            matrix: op.matrix,
        };
        rho.validate()?;
        Ok(rho)
    }

    /// Scrubs roundoff (Hermitian part, unit trace) and validates.
    pub fn from_raw(space: HilbertSpace, matrix: CMat) -> Result<Self> {
        Operator::new(space, matrix.clone())?;
        if !linalg::all_finite(&matrix) {
            return Err(Error::NonFinite("density matrix"));
        }
        let mut m = linalg::hermitian_part(&matrix);
        let tr = linalg::trace(&m).re;
        if !(tr.abs() > 0.0) {
            return Err(Error::InvalidState("zero trace".into()));
        }
        m = linalg::scale(&m, c64::new(1.0 / tr, 0.0));
        Self::new(space, m)
    }

    pub fn pure(space: HilbertSpace, psi: &[c64]) -> Result<Self> {
        let d = space.dim();
        if psi.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "state vector length {} vs dimension {d}",
                psi.len()
            )));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let m = Mat::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / norm);
        Self::new(space, m)
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        let d = space.dim();
        if index >= d {
            return Err(Error::IndexOutOfRange { index, limit: d });
        }
        let mut m = Mat::zeros(d, d);
        m[(index, index)] = c64::new(1.0, 0.0);
        Ok(Self { space, matrix: m })
    }

    /// Thermal state of the field with mean occupation `nbar`, truncated and
    /// renormalized.
    pub fn thermal(space: HilbertSpace, nbar: f64) -> Result<Self> {
        if space.n_qubits() != 0 {
            return Err(Error::InvalidParameter(
                "thermal state requires a field-only space".into(),
            ));
        }
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(Error::InvalidParameter(format!("nbar = {nbar}")));
        }
        let n = space.field_dim();
        let ratio = nbar / (1.0 + nbar);
        let mut p: Vec<f64> = (0..n).map(|k| ratio.powi(k as i32) / (1.0 + nbar)).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let mut m = Mat::zeros(n, n);
        for (k, &x) in p.iter().enumerate() {
            m[(k, k)] = c64::new(x, 0.0);
        }
        Ok(Self { space, matrix: m })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.matrix[(i, j)]
    }

    pub fn as_operator(&self) -> Operator {
        Operator {
            space: self.space,
            matrix: self.matrix.clone(),
        }
    }

    pub fn trace(&self) -> c64 {
        linalg::trace(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        let m = &self.matrix;
        let d = m.nrows();
        let mut s = 0.0;
        for j in 0..d {
            for i in 0..d {
                s += m[(i, j)].norm_sqr();
            }
        }
        s
    }

    /// Ascending eigenvalues of the (Hermitian part of the) matrix.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Linalg(format!("{e:?}")))
    }

    pub fn validate(&self) -> Result<()> {
        if !linalg::all_finite(&self.matrix) {
            return Err(Error::NonFinite("density matrix"));
        }
        let tr = self.trace();
        if (tr - c64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {:.3e}{:+.3e}i differs from 1",
                tr.re, tr.im
            )));
        }
        let dev = linalg::hermitian_deviation(&self.matrix);
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let min = self.eigenvalues()?.first().copied().unwrap_or(0.0);
        if min < -EIGEN_SLACK {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Population of each field level, summed over qubit states.
    pub fn photon_distribution(&self) -> Vec<f64> {
        let n = self.space.field_dim();
        let mut p = vec![0.0; n];
        for q in 0..self.space.qubit_dim() {
            for (k, pk) in p.iter_mut().enumerate() {
                let i = q * n + k;
                *pk += self.matrix[(i, i)].re;
            }
        }
        p
    }

    /// Total population in the top 10% of Fock levels.
    pub fn truncation_tail(&self) -> f64 {
        let p = self.photon_distribution();
        let n = p.len();
        if n < 2 {
            return 0.0;
        }
        let top = n.div_ceil(10);
        p[n - top..].iter().sum()
    }

    /// Fails with [`Error::Truncation`] when the Fock truncation is unhealthy.
    pub fn check_truncation(&self, context: &'static str) -> Result<()> {
        let tail = self.truncation_tail();
        if tail > TAIL_TOL {
            return Err(Error::Truncation {
                context,
                field_dim: self.space.field_dim(),
                tail,
            });
        }
        Ok(())
    }
}

fn check_field(space: &HilbertSpace) -> Result<()> {
    if !space.has_field() {
        return Err(Error::InvalidParameter("space has no field factor".into()));
    }
    Ok(())
}

/// Embeds a single-factor matrix into the full space.
fn embed(space: &HilbertSpace, factor: usize, m: &CMat) -> CMat {
    // factor: 0..n_qubits for qubits, n_qubits for the field
    let mut out = Mat::<c64>::identity(1, 1);
    for k in 0..space.n_qubits() {
        let f = if k == factor { m.clone() } else { Mat::identity(2, 2) };
        out = linalg::kron(&out, &f);
    }
    let f = if factor == space.n_qubits() {
        m.clone()
    } else {
        Mat::identity(space.field_dim(), space.field_dim())
    };
    linalg::kron(&out, &f)
}

/// Field annihilation operator `a` (identity on qubit factors).
pub fn annihilation(space: HilbertSpace) -> Result<Operator> {
    check_field(&space)?;
    let n = space.field_dim();
    let mut a = Mat::<c64>::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c64::new((k as f64).sqrt(), 0.0);
    }
    Operator::new(space, embed(&space, space.n_qubits(), &a))
}

/// Number operator `a†a`.
pub fn number(space: HilbertSpace) -> Result<Operator> {
    let a = annihilation(space)?;
    Ok(&a.adjoint() * &a)
}

/// Qubit operators `(σ, σ_z, σ_x)` for qubit `which`, with `σ = |g><e|`.
pub fn qubit_ops(space: HilbertSpace, which: usize) -> Result<(Operator, Operator, Operator)> {
    if which >= space.n_qubits() {
        return Err(Error::IndexOutOfRange {
            index: which,
            limit: space.n_qubits(),
        });
    }
    let one = c64::new(1.0, 0.0);
    let mut s = Mat::<c64>::zeros(2, 2);
    s[(GROUND, EXCITED)] = one;
    let mut sz = Mat::<c64>::zeros(2, 2);
    sz[(EXCITED, EXCITED)] = one;
    sz[(GROUND, GROUND)] = -one;
    let mut sx = Mat::<c64>::zeros(2, 2);
    sx[(0, 1)] = one;
    sx[(1, 0)] = one;
    Ok((
        Operator::new(space, embed(&space, which, &s))?,
        Operator::new(space, embed(&space, which, &sz))?,
        Operator::new(space, embed(&space, which, &sx))?,
    ))
}

/// Projector onto the excited state of qubit `which`.
pub fn excited_projector(space: HilbertSpace, which: usize) -> Result<Operator> {
    let (s, _, _) = qubit_ops(space, which)?;
    Ok(&s.adjoint() * &s)
}

/// Kronecker product. The left operand must act on qubits only so that the
/// ordering qubit 1 ⊗ qubit 2 ⊗ field is preserved.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let space = a.space.compose(&b.space)?;
    Operator::new(space, linalg::kron(&a.matrix, &b.matrix))
}

/// Matrix exponential of an operator.
pub fn matrix_exponential(generator: &Operator) -> Result<Operator> {
    Operator::new(generator.space, linalg::expm(&generator.matrix)?)
}

/// Displacement `D(α) = exp(α a† − α* a)` on the field factor.
pub fn displacement(space: HilbertSpace, alpha: c64) -> Result<Operator> {
    check_field(&space)?;
    let n = space.field_dim();
    if alpha.norm_sqr() > n as f64 / 4.0 {
        return Err(Error::Truncation {
            context: "displacement",
            field_dim: n,
            tail: f64::NAN,
        });
    }
    let a = annihilation(HilbertSpace::field(n)?)?;
    let g = &a.adjoint().scaled(alpha) - &a.scaled(alpha.conj());
    let d = linalg::expm(g.matrix())?;
    Operator::new(space, embed(&space, space.n_qubits(), &d))
}

/// Squeezing `S(r) = exp[r(a†² − a²)/2]` on the field factor.
pub fn squeeze(space: HilbertSpace, r: f64) -> Result<Operator> {
    check_field(&space)?;
    let n = space.field_dim();
    if !r.is_finite() {
        return Err(Error::InvalidParameter(format!("squeezing r = {r}")));
    }
    if (2.0 * r.abs()).exp() > n as f64 / 4.0 {
        return Err(Error::Truncation {
            context: "squeeze",
            field_dim: n,
            tail: f64::NAN,
        });
    }
    let a = annihilation(HilbertSpace::field(n)?)?;
    let a2 = &a * &a;
    let g = (&a2.adjoint() - &a2).scaled_re(r / 2.0);
    let s = linalg::expm(g.matrix())?;
    Operator::new(space, embed(&space, space.n_qubits(), &s))
}

/// Phase rotation `exp(iφ a†a)` on the field factor.
pub fn rotation(space: HilbertSpace, phi: f64) -> Result<Operator> {
    check_field(&space)?;
    let n = space.field_dim();
    let mut m = Mat::<c64>::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = c64::from_polar(1.0, phi * k as f64);
    }
    Operator::new(space, embed(&space, space.n_qubits(), &m))
}

/// `tr(O ρ)`.
pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<c64> {
    if op.space != rho.space {
        return Err(Error::DimensionMismatch(format!(
            "operator on {:?}, state on {:?}",
            op.space, rho.space
        )));
    }
    Ok(linalg::trace_product(&op.matrix, &rho.matrix))
}

pub fn adjoint(op: &Operator) -> Operator {
    op.adjoint()
}

/// `AB − BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    Ok(&a.try_mul(b)? - &b.try_mul(a)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    #[test]
    fn ladder_matrix_elements() {
        let s = HilbertSpace::field(2).unwrap();
        let a = annihilation(s).unwrap();
        assert_eq!(a.get(0, 1), c(1.0));
        assert_eq!(a.get(1, 0), c(0.0));
        assert_eq!(a.get(0, 0), c(0.0));

        let s = HilbertSpace::field(7).unwrap();
        let n = number(s).unwrap();
        for k in 0..7 {
            assert!((n.get(k, k).re - k as f64).abs() < 1e-14);
        }
        let a = annihilation(s).unwrap();
        let out = a
            .apply(&[c(0.0), c(1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0)])
            .unwrap();
        assert!((out[0] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn basis_ordering_is_excited_first() {
        let s = HilbertSpace::new(1, 3).unwrap();
        assert_eq!(s.index(&[EXCITED], 0).unwrap(), 0);
        assert_eq!(s.index(&[GROUND], 2).unwrap(), 5);
        let s2 = HilbertSpace::new(2, 3).unwrap();
        assert_eq!(s2.index(&[GROUND, EXCITED], 1).unwrap(), 7);

        let q = HilbertSpace::qubits_only(1).unwrap();
        let (_, sz, _) = qubit_ops(q, 0).unwrap();
        assert_eq!(sz.get(0, 0), c(1.0));
        assert_eq!(sz.get(1, 1), c(-1.0));
    }

    #[test]
    fn pauli_algebra() {
        let s = HilbertSpace::new(2, 3).unwrap();
        for which in 0..2 {
            let (sm, sz, _) = qubit_ops(s, which).unwrap();
            let sp = sm.adjoint();
            let anti = &(&sm * &sp) + &(&sp * &sm);
            let id = Operator::identity(s);
            assert!(linalg::max_abs(&(anti.matrix() - id.matrix())) < 1e-15);
            let comm = commutator(&sz, &sm).unwrap();
            let expect = sm.scaled_re(-2.0);
            assert!(linalg::max_abs(&(comm.matrix() - expect.matrix())) < 1e-15);
        }
        assert!(qubit_ops(s, 2).is_err());
    }

    #[test]
    fn tensor_identities() {
        let i2 = Operator::identity(HilbertSpace::qubits_only(1).unwrap());
        let i3 = Operator::identity(HilbertSpace::field(3).unwrap());
        let i6 = tensor(&i2, &i3).unwrap();
        assert!(linalg::max_abs(&(i6.matrix() - Mat::<c64>::identity(6, 6))) == 0.0);
        assert!(tensor(&i3, &i2).is_err());
    }

    #[test]
    fn tensor_ordering_is_associative() {
        let q = HilbertSpace::qubits_only(1).unwrap();
        let f = HilbertSpace::field(4).unwrap();
        let (_, sz, _) = qubit_ops(q, 0).unwrap();
        let id = Operator::identity(q);
        let a = annihilation(f).unwrap();
        let left = tensor(&tensor(&sz, &id).unwrap(), &a).unwrap();
        let right = tensor(&sz, &tensor(&id, &a).unwrap()).unwrap();
        assert_eq!(left.space(), right.space());
        assert!(linalg::max_abs(&(left.matrix() - right.matrix())) == 0.0);

        let full = HilbertSpace::new(2, 4).unwrap();
        let (_, sz_full, _) = qubit_ops(full, 0).unwrap();
        let a_full = annihilation(full).unwrap();
        let direct = &sz_full * &a_full;
        assert!(linalg::max_abs(&(direct.matrix() - left.matrix())) < 1e-15);
    }

    #[test]
    fn displacement_vacuum_overlap() {
        let s = HilbertSpace::field(30).unwrap();
        let alpha = c64::new(0.8, -0.5);
        let d = displacement(s, alpha).unwrap();
        let expect = (-alpha.norm_sqr() / 2.0).exp();
        assert!((d.get(0, 0) - c(expect)).norm() < 1e-10);
        let d0 = displacement(s, c(0.0)).unwrap();
        assert!(linalg::max_abs(&(d0.matrix() - Mat::<c64>::identity(30, 30))) < 1e-15);
    }

    #[test]
    fn displacement_rejects_large_amplitude() {
        let s = HilbertSpace::field(20).unwrap();
        let err = displacement(s, c(3.0)).unwrap_err();
        assert!(err.is_truncation());
    }

    #[test]
    fn squeeze_variance() {
        let s = HilbertSpace::field(60).unwrap();
        let r = 1.2;
        let sq = squeeze(s, r).unwrap();
        let mut vac = vec![c(0.0); 60];
        vac[0] = c(1.0);
        let psi = sq.apply(&vac).unwrap();
        let rho = DensityMatrix::pure(s, &psi).unwrap();
        let a = annihilation(s).unwrap();
        let x = &a + &a.adjoint();
        let x2 = expectation(&(&x * &x), &rho).unwrap().re;
        assert!((x2 / (2.0 * r).exp() - 1.0).abs() < 0.01);
    }

    #[test]
    fn squeeze_bogoliubov_action() {
        let n = 80;
        let s = HilbertSpace::field(n).unwrap();
        let r = 0.5;
        let sq = squeeze(s, r).unwrap();
        let a = annihilation(s).unwrap();
        let lhs = &(&sq.adjoint() * &a) * &sq;
        let rhs = &a.scaled_re(r.cosh()) + &a.adjoint().scaled_re(r.sinh());
        for i in 0..10 {
            for j in 0..10 {
                assert!((lhs.get(i, j) - rhs.get(i, j)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn thermal_geometric_ratio() {
        let s = HilbertSpace::field(20).unwrap();
        let rho = DensityMatrix::thermal(s, 0.5).unwrap();
        for k in 0..10 {
            let ratio = rho.get(k + 1, k + 1).re / rho.get(k, k).re;
            assert!((ratio - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_of_identity_and_number() {
        let s = HilbertSpace::new(1, 5).unwrap();
        let idx = s.index(&[GROUND], 3).unwrap();
        let rho = DensityMatrix::basis(s, idx).unwrap();
        assert!((expectation(&Operator::identity(s), &rho).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((expectation(&number(s).unwrap(), &rho).unwrap() - c(3.0)).norm() < 1e-14);
    }

    #[test]
    fn canonical_commutator_below_top_level() {
        let s = HilbertSpace::field(8).unwrap();
        let a = annihilation(s).unwrap();
        let comm = commutator(&a, &a.adjoint()).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j && i < 7 {
                    1.0
                } else if i == j {
                    -7.0
                } else {
                    0.0
                };
                assert!((comm.get(i, j) - c(want)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn density_validation_rejects_bad_states() {
        let s = HilbertSpace::field(2).unwrap();
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 0)] = c(1.5);
        m[(1, 1)] = c(-0.5);
        assert!(DensityMatrix::new(s, m).is_err());
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 0)] = c(0.5);
        m[(1, 1)] = c(0.5);
        m[(0, 1)] = c64::new(0.0, 0.1);
        assert!(DensityMatrix::new(s, m).is_err());
    }

    #[test]
    fn truncation_tail_flags_top_levels() {
        let s = HilbertSpace::field(20).unwrap();
        let rho = DensityMatrix::basis(s, 19).unwrap();
        assert!(rho.check_truncation("test").unwrap_err().is_truncation());
        let rho = DensityMatrix::basis(s, 3).unwrap();
        assert!(rho.check_truncation("test").is_ok());
    }
}
