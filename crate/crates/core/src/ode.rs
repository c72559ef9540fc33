//! Adaptive Dormand–Prince 5(4) for small fixed-size systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 200_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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
// 5th-order weights are A[6]; error weights are (5th - 4th).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl Dopri5 {
    pub fn integrate<const N: usize>(
        &self,
        f: impl FnMut(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y0: [f64; N],
        t1: f64,
    ) -> Result<[f64; N]> {
        self.integrate_observed(f, t0, y0, t1, |_, _| {})
    }

    /// Like `integrate`, calling `observe(t, y)` after every accepted step.
    pub fn integrate_observed<const N: usize>(
        &self,
        mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y0: [f64; N],
        t1: f64,
        mut observe: impl FnMut(f64, &[f64; N]),
    ) -> Result<[f64; N]> {
        let span = t1 - t0;
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::Integration(format!("bad interval [{t0}, {t1}]")));
        }
        let mut t = t0;
        let mut y = y0;
        let mut k = [[0.0; N]; 7];
        k[0] = f(t, &y);
        let mut h = span * 1e-3;
        let mut accepted = 0usize;
        for _ in 0..self.max_steps {
            if t >= t1 {
                return Ok(y);
            }
            let last = t + h >= t1;
            if last {
                h = t1 - t;
            }
            for s in 1..7 {
                let mut ys = y;
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
            let mut y_new = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                for i in 0..N {
                    y_new[i] += h * A[6][j] * kj[i];
                }
            }
            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (h * e / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y = y_new;
                k[0] = k[6]; // FSAL
                accepted += 1;
                observe(t, &y);
            }
            let fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            h *= fac.clamp(0.2, 5.0);
            if h.abs() < 1e-14 * span {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        if t >= t1 {
            return Ok(y);
        }
        Err(Error::Integration(format!(
            "step budget exhausted after {accepted} accepted steps at t = {t}"
        )))
    }
}
