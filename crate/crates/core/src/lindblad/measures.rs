use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, HilbertSpace, EIGEN_SLACK};
use crate::linalg::{self, CMat};

/// Tensor factor selector for partial traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Qubit(usize),
    Field,
}

/// Reduced state on the factors listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[Factor]) -> Result<DensityMatrix> {
    let space = rho.space();
    let nq = space.n_qubits();
    let mut keep_q = vec![false; nq];
    let mut keep_f = false;
    for &f in keep {
        match f {
            Factor::Qubit(k) if k < nq => keep_q[k] = true,
            Factor::Qubit(k) => return Err(Error::IndexOutOfRange { index: k, limit: nq }),
            Factor::Field if space.has_field() => keep_f = true,
            Factor::Field => return Err(Error::InvalidParameter("space has no field factor".into())),
        }
    }
    let kept_q: Vec<usize> = (0..nq).filter(|&k| keep_q[k]).collect();
    if kept_q.is_empty() && !keep_f {
        return Err(Error::InvalidParameter(
            "partial trace must keep at least one factor".into(),
        ));
    }
    let out_space = if keep_f {
        HilbertSpace::new(kept_q.len(), space.field_dim())?
    } else {
        HilbertSpace::qubits_only(kept_q.len())?
    };
    let n = space.field_dim();
    // digits: qubit labels then field level
    let decompose = |idx: usize| -> (Vec<usize>, usize) {
        let f = idx % n;
        let mut q = idx / n;
        let mut labels = vec![0; nq];
        for k in (0..nq).rev() {
            labels[k] = q % 2;
            q /= 2;
        }
        (labels, f)
    };
    let out_n = out_space.field_dim();
    let reduced_index = |labels: &[usize], f: usize| -> usize {
        let mut q = 0;
        for &k in &kept_q {
            q = 2 * q + labels[k];
        }
        q * out_n + if keep_f { f } else { 0 }
    };
    let traced_key = |labels: &[usize], f: usize| -> (Vec<usize>, usize) {
        let lab: Vec<usize> = (0..nq).filter(|k| !keep_q[*k]).map(|k| labels[k]).collect();
        (lab, if keep_f { 0 } else { f })
    };
    let d = space.dim();
    let digits: Vec<(Vec<usize>, usize)> = (0..d).map(decompose).collect();
    let mut out = Mat::<c64>::zeros(out_space.dim(), out_space.dim());
    for (j, (lj, fj)) in digits.iter().enumerate() {
        let kj = traced_key(lj, *fj);
        let rj = reduced_index(lj, *fj);
        for (i, (li, fi)) in digits.iter().enumerate() {
            if traced_key(li, *fi) != kj {
                continue;
            }
            out[(reduced_index(li, *fi), rj)] += rho.get(i, j);
        }
    }
    DensityMatrix::from_raw(out_space, out)
}

/// Field state with all qubits traced out.
pub fn reduced_field(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.space().n_qubits() == 0 {
        return Ok(rho.clone());
    }
    partial_trace(rho, &[Factor::Field])
}

fn psd_sqrt(m: &CMat) -> Result<CMat> {
    let (vals, _) = linalg::eigh(m)?;
    if let Some(&min) = vals.first() {
        if min < -EIGEN_SLACK {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e} in fidelity input"
            )));
        }
    }
    linalg::sqrtm_psd(m)
}

fn check_pair(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.space() != b.space() {
        return Err(Error::DimensionMismatch(format!(
            "states live on {:?} and {:?}",
            a.space(),
            b.space()
        )));
    }
    for m in [a.matrix(), b.matrix()] {
        let dev = linalg::hermitian_deviation(m);
        if dev > 1e-8 {
            return Err(Error::NotHermitian(dev));
        }
    }
    Ok(())
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let s = psd_sqrt(rho.matrix())?;
    let m = &(&s * sigma.matrix()) * &s;
    let (vals, _) = linalg::eigh(&m)?;
    let t: f64 = vals.iter().map(|&x| x.max(0.0).sqrt()).sum();
    Ok((t * t).clamp(0.0, 1.0))
}

/// `½ tr|ρ − σ|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let (vals, _) = linalg::eigh(&diff)?;
    Ok(0.5 * vals.iter().map(|x| x.abs()).sum::<f64>())
}
