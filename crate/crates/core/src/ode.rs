//! Adaptive Dormand–Prince 5(4) integrator with continuous output.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step, carrying what is needed for continuous output.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    cont: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    /// Fourth-order interpolant at `t ∈ [t0, t0 + h]`.
    pub fn dense(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.cont;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Dopri5 { rtol, atol, max_steps: 1_000_000 }
    }

    /// A single step of size `h` without error control.
    pub fn step<const N: usize>(
        &self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        t: f64,
        y: &[f64; N],
        h: f64,
    ) -> (Step<N>, f64) {
        let mut k = [[0.0; N]; 7];
        k[0] = f(t, y);
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y1 = *y;
        for i in 0..N {
            for s in 0..6 {
                y1[i] += h * A[6][s] * k[s][i];
            }
        }
        // k[6] was evaluated at exactly y1 (first-same-as-last).
        let mut err = 0.0;
        for i in 0..N {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / N as f64).sqrt();
        let mut cont = [[0.0; N]; 5];
        for i in 0..N {
            let dy = y1[i] - y[i];
            let bspl = h * k[0][i] - dy;
            cont[0][i] = y[i];
            cont[1][i] = dy;
            cont[2][i] = bspl;
            cont[3][i] = dy - h * k[6][i] - bspl;
            cont[4][i] = h * (0..7).map(|s| D[s] * k[s][i]).sum::<f64>();
        }
        (Step { t0: t, t1: t + h, h, y0: *y, y1, cont }, err)
    }

    /// Integrates from `t0` towards `t_end`, calling `visit` after every
    /// accepted step; stops early when `visit` returns `false`. `stops` are
    /// times that steps must land on exactly (ascending, within the interval).
    pub fn integrate<const N: usize>(
        &self,
        f: impl Fn(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        h0: f64,
        stops: &[f64],
        mut visit: impl FnMut(&Step<N>) -> bool,
    ) -> Result<[f64; N]> {
        let mut t = t0;
        let mut y = y0;
        let mut h = h0.min(t_end - t0);
        let mut next_stop = stops.iter().position(|&s| s > t0);
        for _ in 0..self.max_steps {
            if t >= t_end {
                return Ok(y);
            }
            let mut target = t_end;
            if let Some(k) = next_stop {
                target = target.min(stops[k]);
            }
            let landing = t + h >= target * (1.0 - 1e-15) - 1e-300;
            let hh = if landing { target - t } else { h };
            let (mut step, err) = self.step(&f, t, &y, hh);
            if landing {
                step.t1 = target;
            }
            let finite = step.y1.iter().all(|v| v.is_finite());
            if finite && err <= 1.0 {
                t = if landing { target } else { t + hh };
                y = step.y1;
                if landing {
                    if let Some(k) = next_stop {
                        if stops[k] <= t {
                            next_stop = (k + 1 < stops.len()).then_some(k + 1);
                        }
                    }
                }
                if !visit(&step) {
                    return Ok(y);
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = if landing && hh < h { h } else { hh * fac };
            } else {
                let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
                h = hh * fac;
                if h <= 1e-14 * t.abs().max(1e-300) {
                    return Err(Error::Convergence { what: "adaptive ODE step size", iterations: 0, residual: err });
                }
            }
        }
        Err(Error::Convergence { what: "ODE integration", iterations: self.max_steps, residual: t_end - t })
    }
}
