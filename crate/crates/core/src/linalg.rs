//! Dense complex matrix helpers on top of `faer`.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub fn zero() -> c64 {
    c64::new(0.0, 0.0)
}

pub fn one() -> c64 {
    c64::new(1.0, 0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Mat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let x = a[(i, j)];
            if x == zero() {
                continue;
            }
            for l in 0..bc {
                for k in 0..br {
                    out[(i * br + k, j * bc + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn trace(m: &CMat) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> c64 {
    let mut s = zero();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

pub fn scale(m: &CMat, s: c64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn frobenius(m: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn all_finite(m: &CMat) -> bool {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return false;
            }
        }
    }
    true
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j.min(m.nrows().saturating_sub(1)) {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

pub fn hermitian_part(m: &CMat) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

pub fn matvec(m: &CMat, x: &[c64]) -> Vec<c64> {
    let mut y = vec![zero(); m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == zero() {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += m[(i, j)] * xj;
        }
    }
    y
}

pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `A X = B` by partially pivoted LU.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let lu = a.partial_piv_lu();
    let x = lu.solve(b);
    if !all_finite(&x) {
        return Err(Error::Linalg("singular system in dense solve".into()));
    }
    Ok(x)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn axpy_sum(terms: &[(f64, &CMat)], n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| terms.iter().map(|(c, m)| m[(i, j)] * *c).sum::<c64>())
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expm of a {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    let nrm = norm1(m);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = scale(m, c64::new(0.5f64.powi(s), 0.0));
    let id: CMat = Mat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let inner_u = axpy_sum(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let u_poly = &(&a6 * &inner_u) + &axpy_sum(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)], n);
    let u = &a * &u_poly;
    let inner_v = axpy_sum(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let v = &(&a6 * &inner_v) + &axpy_sum(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)], n);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve(&q, &p)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !all_finite(&r) {
        return Err(Error::NonFinite("matrix exponential"));
    }
    Ok(r)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
/// eigenvectors as columns.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let h = hermitian_part(m);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = evd.S();
    let vals: Vec<f64> = (0..h.nrows()).map(|i| s[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Square root of a positive semidefinite Hermitian matrix, eigenvalues
/// floored at zero.
pub fn sqrtm_psd(m: &CMat) -> Result<CMat> {
    let (vals, u) = eigh(m)?;
    let n = m.nrows();
    let roots: Vec<f64> = vals.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * roots[j]);
    Ok(&scaled * u.adjoint())
}
