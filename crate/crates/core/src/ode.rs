//! Adaptive Dormand–Prince 5(4) integrator on complex state vectors.

use faer::c64;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-8,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerances(atol: f64, rtol: f64) -> Self {
        Self {
            atol,
            rtol,
            ..Self::default()
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const PI_ALPHA: f64 = 0.17;
const PI_BETA: f64 = 0.04;

/// Integrator state. The right-hand side is passed to each call so that the
/// same integrator can be driven by closures borrowing local data.
pub struct Integrator {
    t: f64,
    y: Vec<c64>,
    h: f64,
    opts: OdeOptions,
    k: Vec<Vec<c64>>,
    ytmp: Vec<c64>,
    ynew: Vec<c64>,
    fsal: bool,
    err_prev: f64,
    steps: usize,
    rejected: usize,
}

impl Integrator {
    pub fn new(t0: f64, y0: Vec<c64>, opts: OdeOptions) -> Self {
        let n = y0.len();
        Self {
            t: t0,
            h: opts.h_init.unwrap_or(0.0),
            y: y0,
            opts,
            k: vec![vec![c64::new(0.0, 0.0); n]; 7],
            ytmp: vec![c64::new(0.0, 0.0); n],
            ynew: vec![c64::new(0.0, 0.0); n],
            fsal: false,
            err_prev: 1e-4,
            steps: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[c64] {
        &self.y
    }

    pub fn into_state(self) -> Vec<c64> {
        self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Derivative at the current point.
    pub fn derivative<F>(&mut self, f: &mut F) -> Result<&[c64]>
    where
        F: FnMut(f64, &[c64], &mut [c64]) -> Result<()>,
    {
        if !self.fsal {
            f(self.t, &self.y, &mut self.k[0])?;
            self.fsal = true;
        }
        Ok(&self.k[0])
    }

    fn scaled_norm(&self, v: &[c64]) -> f64 {
        let n = v.len().max(1) as f64;
        let s: f64 = v
            .iter()
            .zip(self.y.iter())
            .map(|(d, y)| {
                let sc = self.opts.atol + self.opts.rtol * y.norm();
                (d.norm() / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    }

    fn initial_step<F>(&mut self, f: &mut F, span: f64) -> Result<f64>
    where
        F: FnMut(f64, &[c64], &mut [c64]) -> Result<()>,
    {
        self.derivative(f)?;
        let d0 = self.scaled_norm(&self.y.clone());
        let d1 = self.scaled_norm(&self.k[0].clone());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        Ok(h0.min(span.abs()).min(self.opts.h_max))
    }

    /// Advances exactly to `t_end`.
    pub fn advance_to<F>(&mut self, t_end: f64, f: &mut F) -> Result<()>
    where
        F: FnMut(f64, &[c64], &mut [c64]) -> Result<()>,
    {
        self.advance_to_with(t_end, f, &mut |_, _| Ok(()))
    }

    /// Advances exactly to `t_end`, calling `on_accept` after each accepted
    /// step.
    pub fn advance_to_with<F, G>(&mut self, t_end: f64, f: &mut F, on_accept: &mut G) -> Result<()>
    where
        F: FnMut(f64, &[c64], &mut [c64]) -> Result<()>,
        G: FnMut(f64, &[c64]) -> Result<()>,
    {
        if t_end < self.t {
            return Err(Error::InvalidParameter(format!(
                "cannot integrate backwards from {} to {t_end}",
                self.t
            )));
        }
        if t_end == self.t {
            return Ok(());
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(f, t_end - self.t)?;
        }
        let n = self.y.len();
        while self.t < t_end {
            if self.steps + self.rejected >= self.opts.max_steps {
                return Err(Error::StepLimit(self.opts.max_steps));
            }
            let remaining = t_end - self.t;
            let last = self.h >= remaining * (1.0 - 1e-12);
            let h = if last { remaining } else { self.h.min(self.opts.h_max) };
            let h_floor = 1e-14 * self.t.abs().max(1.0);
            if h < h_floor && !last {
                return Err(Error::StepSizeUnderflow { t: self.t, h });
            }

            self.derivative(f)?;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = self.y[i];
                    for (j, kj) in self.k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * (h * a);
                        }
                    }
                    if s == 6 {
                        self.ynew[i] = acc;
                    } else {
                        self.ytmp[i] = acc;
                    }
                }
                let (head, tail) = self.k.split_at_mut(s);
                let _ = head;
                let arg = if s == 6 { &self.ynew } else { &self.ytmp };
                f(self.t + C[s] * h, arg, &mut tail[0])?;
            }
            // error estimate
            let mut err_sq = 0.0;
            for i in 0..n {
                let mut e = c64::new(0.0, 0.0);
                for (j, kj) in self.k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += kj[i] * E[j];
                    }
                }
                e *= h;
                let sc = self.opts.atol + self.opts.rtol * self.y[i].norm().max(self.ynew[i].norm());
                err_sq += (e.norm() / sc).powi(2);
            }
            let err = (err_sq / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::NonFinite("ODE step"));
            }
            if err <= 1.0 {
                self.t = if last { t_end } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.ynew);
                self.k.swap(0, 6);
                self.fsal = true;
                self.steps += 1;
                let fac = SAFETY * err.max(1e-10).powf(-PI_ALPHA) * self.err_prev.powf(PI_BETA);
                let fac = fac.clamp(FAC_MIN, FAC_MAX);
                self.err_prev = err.max(1e-4);
                if !last || h * fac < self.h {
                    self.h = (h * fac).min(self.opts.h_max);
                }
                on_accept(self.t, &self.y)?;
            } else {
                self.rejected += 1;
                let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
                self.h = h * fac;
                if self.h < 1e-14 * self.t.abs().max(1.0) {
                    return Err(Error::StepSizeUnderflow { t: self.t, h: self.h });
                }
            }
        }
        Ok(())
    }
}

/// Integrates from `t0` and returns the state at each requested time.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[c64], t_out: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<c64>>>
where
    F: FnMut(f64, &[c64], &mut [c64]) -> Result<()>,
{
    let mut it = Integrator::new(t0, y0.to_vec(), opts.clone());
    let mut out = Vec::with_capacity(t_out.len());
    for &t in t_out {
        it.advance_to(t, &mut f)?;
        out.push(it.y().to_vec());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_rotation() {
        let lam = c64::new(-0.7, 3.0);
        let f = |_t: f64, y: &[c64], dy: &mut [c64]| {
            dy[0] = lam * y[0];
            Ok(())
        };
        let ts = [0.5, 1.0, 4.0];
        let out = integrate(f, 0.0, &[c64::new(1.0, 0.0)], &ts, &OdeOptions::default()).unwrap();
        for (y, &t) in out.iter().zip(ts.iter()) {
            let want = (lam * t).exp();
            assert!((y[0] - want).norm() < 1e-8);
        }
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = cos(t) y, y = exp(sin t)
        let f = |t: f64, y: &[c64], dy: &mut [c64]| {
            dy[0] = y[0] * t.cos();
            Ok(())
        };
        let out = integrate(f, 0.0, &[c64::new(1.0, 0.0)], &[10.0], &OdeOptions::default()).unwrap();
        assert!((out[0][0].re - 10f64.sin().exp()).abs() < 1e-7);
    }

    #[test]
    fn zero_rhs_leaves_state() {
        let f = |_t: f64, _y: &[c64], dy: &mut [c64]| {
            dy.iter_mut().for_each(|d| *d = c64::new(0.0, 0.0));
            Ok(())
        };
        let y0 = [c64::new(0.3, 0.1), c64::new(-2.0, 0.0)];
        let out = integrate(f, 0.0, &y0, &[5.0], &OdeOptions::default()).unwrap();
        assert_eq!(out[0], y0.to_vec());
    }

    #[test]
    fn lands_on_output_times() {
        let f = |_t: f64, y: &[c64], dy: &mut [c64]| {
            dy[0] = -y[0];
            Ok(())
        };
        let mut it = Integrator::new(0.0, vec![c64::new(1.0, 0.0)], OdeOptions::default());
        let mut fm = f;
        it.advance_to(0.123, &mut fm).unwrap();
        assert_eq!(it.t(), 0.123);
        it.advance_to(0.123, &mut fm).unwrap();
        assert!(it.advance_to(0.1, &mut fm).is_err());
    }

    #[test]
    fn nan_rhs_is_reported() {
        let f = |_t: f64, _y: &[c64], dy: &mut [c64]| {
            dy[0] = c64::new(f64::NAN, 0.0);
            Ok(())
        };
        let r = integrate(f, 0.0, &[c64::new(1.0, 0.0)], &[1.0], &OdeOptions::default());
        assert!(r.is_err());
    }
}
