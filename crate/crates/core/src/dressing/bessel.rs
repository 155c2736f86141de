use crate::error::{Error, Result};

pub const MAX_ORDER: i32 = 64;

/// Integer-order Bessel function of the first kind, `|order| <= 64`.
pub fn bessel_j(order: i32, x: f64) -> Result<f64> {
    if order.abs() > MAX_ORDER {
        return Err(Error::BesselOrder(order));
    }
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("Bessel argument {x}")));
    }
    let n = order.unsigned_abs() as usize;
    let mut sign = if order < 0 && n % 2 == 1 { -1.0 } else { 1.0 };
    if x < 0.0 && n % 2 == 1 {
        sign = -sign;
    }
    Ok(sign * bessel_j_seq(n, x.abs())[n])
}

/// `J_0(x) ..= J_nmax(x)` for `x >= 0` from a single recurrence pass.
pub fn bessel_j_seq(nmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; nmax + 1];
        v[0] = 1.0;
        return v;
    }
    if x <= 0.5 {
        return (0..=nmax).map(|n| series(n, x)).collect();
    }
    miller(nmax, x)
}

fn series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let q = -h * h;
    // (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    let mut sum = term;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || k > 200 {
            break;
        }
    }
    sum
}

fn miller(nmax: usize, x: f64) -> Vec<f64> {
    let base = nmax.max(x.ceil() as usize);
    let mut m = base + 40 + (120.0 * base as f64).sqrt().ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let mut out = vec![0.0; nmax + 1];
    let mut jp = 0.0f64; // J_{k+1}
    let mut j = 1e-300f64; // J_k
    let mut norm = 0.0f64;
    let two_over_x = 2.0 / x;
    for k in (1..=m).rev() {
        let jm = k as f64 * two_over_x * j - jp;
        jp = j;
        j = jm;
        // now j = J_{k-1}
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    norm += j;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}
