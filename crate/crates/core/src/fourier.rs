//! Periodic grids: collocation matrices, the zero-mean basis, FFT helpers.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Uniform grid on [0, L) with N points (endpoint excluded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid {
    pub length: f64,
    pub n: usize,
    pub zero_mean: bool,
}

impl FourierGrid {
    pub fn new(length: f64, n: usize, zero_mean: bool) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(domain(format!("grid length {length} must be positive")));
        }
        if n < 64 || !n.is_multiple_of(2) {
            return Err(domain(format!("grid size N = {n} must be even and >= 64")));
        }
        Ok(Self { length, n, zero_mean })
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        grid_points(self.length, self.n)
    }

    /// Wavenumbers 2 pi n / L for n = -N/2+1 ..= N/2, in that order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let half = (self.n / 2) as i64;
        (-half + 1..=half)
            .map(|m| 2.0 * PI * m as f64 / self.length)
            .collect()
    }

    /// Dimension of the space the grid represents.
    pub fn dim(&self) -> usize {
        if self.zero_mean {
            self.n - 1
        } else {
            self.n
        }
    }

    pub fn diff1_matrix(&self) -> DMatrix<f64> {
        diff1_matrix(self.length, self.n)
    }

    pub fn diff2_matrix(&self) -> DMatrix<f64> {
        diff2_matrix(self.length, self.n)
    }

    pub fn zero_mean_basis(&self) -> DMatrix<f64> {
        zero_mean_basis(self.n)
    }
}

pub fn grid_points(length: f64, n: usize) -> Vec<f64> {
    let h = length / n as f64;
    (0..n).map(|j| j as f64 * h).collect()
}

fn alt(m: usize) -> f64 {
    if m.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Fourier collocation first derivative (antisymmetric; kills the Nyquist mode).
pub fn diff1_matrix(length: f64, n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let s = 2.0 * PI / length;
    let col: Vec<f64> = (0..n)
        .map(|m| {
            if m == 0 {
                0.0
            } else {
                0.5 * alt(m) / (0.5 * m as f64 * h).tan() * s
            }
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            col[i - j]
        } else {
            -col[j - i]
        }
    })
}

/// Fourier collocation second derivative (symmetric; Nyquist eigenvalue -(N/2)^2 s^2).
pub fn diff2_matrix(length: f64, n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let s2 = (2.0 * PI / length).powi(2);
    let col: Vec<f64> = (0..n)
        .map(|m| {
            if m == 0 {
                (-PI * PI / (3.0 * h * h) - 1.0 / 6.0) * s2
            } else {
                -0.5 * alt(m) / (0.5 * m as f64 * h).sin().powi(2) * s2
            }
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| col[i.abs_diff(j)])
}

/// Orthonormal real Fourier basis of the mean-free vectors, N x (N-1):
/// cos/sin pairs for 1 <= n < N/2, then the Nyquist column.
pub fn zero_mean_basis(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n - 1);
    let norm = (2.0 / n as f64).sqrt();
    for m in 1..n / 2 {
        for j in 0..n {
            let arg = 2.0 * PI * (m * j) as f64 / n as f64;
            q[(j, 2 * (m - 1))] = norm * arg.cos();
            q[(j, 2 * (m - 1) + 1)] = norm * arg.sin();
        }
    }
    let nyq = 1.0 / (n as f64).sqrt();
    for j in 0..n {
        q[(j, n - 2)] = alt(j) * nyq;
    }
    q
}

/// Periodic trapezoid rule: h * sum(values).
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    h * values.iter().sum::<f64>()
}

/// FFT-backed operations on one periodic grid.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    length: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// signed wavenumbers in FFT order; Nyquist entry is +N/2 * 2pi/L
    kappa: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl Spectral {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(domain(format!("grid size N = {n} must be even and >= 4")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(domain(format!("grid length {length} must be positive")));
        }
        let mut planner = FftPlanner::new();
        let s = 2.0 * PI / length;
        let kappa = (0..n)
            .map(|m| {
                let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                m * s
            })
            .collect();
        Ok(Self {
            n,
            length,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            kappa,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// |kappa| per FFT slot (Nyquist included).
    pub fn abs_wavenumbers(&self) -> impl Iterator<Item = f64> + '_ {
        self.kappa.iter().map(|k| k.abs())
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        assert_eq!(u.len(), self.n);
        let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform including the 1/N normalisation; imaginary parts dropped.
    pub fn inverse(&self, mut modes: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut modes);
        let s = 1.0 / self.n as f64;
        modes.into_iter().map(|z| z.re * s).collect()
    }

    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        let mut m = self.forward(u);
        for (j, z) in m.iter_mut().enumerate() {
            *z = if j == self.n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                *z * Complex64::new(0.0, self.kappa[j])
            };
        }
        self.inverse(m)
    }

    pub fn second_derivative(&self, u: &[f64]) -> Vec<f64> {
        let mut m = self.forward(u);
        for (z, k) in m.iter_mut().zip(&self.kappa) {
            *z *= -k * k;
        }
        self.inverse(m)
    }

    /// Samples of the trigonometric interpolant at x + a.
    pub fn shift(&self, u: &[f64], a: f64) -> Vec<f64> {
        let mut m = self.forward(u);
        for (j, z) in m.iter_mut().enumerate() {
            if j == self.n / 2 {
                // keep the interpolant real: Nyquist contributes cos only
                *z *= (self.kappa[j] * a).cos();
            } else {
                *z *= Complex64::from_polar(1.0, self.kappa[j] * a);
            }
        }
        self.inverse(m)
    }

    pub fn integrate(&self, u: &[f64]) -> f64 {
        trapezoid(u, self.spacing())
    }
}

pub fn mean(u: &[f64]) -> f64 {
    u.iter().sum::<f64>() / u.len() as f64
}

pub fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(FourierGrid::new(1.0, 63, false).is_err());
        assert!(FourierGrid::new(1.0, 32, false).is_err());
        assert!(FourierGrid::new(-1.0, 64, false).is_err());
        let g = FourierGrid::new(2.0, 64, true).unwrap();
        assert_eq!(g.dim(), 63);
        assert_eq!(g.wavenumbers().len(), 64);
        assert!((g.wavenumbers()[63] - 32.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn matrices_differentiate_trig() {
        let (l, n) = (2.5, 64);
        let x = grid_points(l, n);
        let k = 2.0 * PI * 3.0 / l;
        let u = nalgebra::DVector::from_iterator(n, x.iter().map(|x| (k * x).sin()));
        let d1 = diff1_matrix(l, n) * &u;
        let d2 = diff2_matrix(l, n) * &u;
        for j in 0..n {
            assert!((d1[j] - k * (k * x[j]).cos()).abs() < 1e-11);
            assert!((d2[j] + k * k * u[j]).abs() < 1e-10);
        }
        let d1m = diff1_matrix(l, n);
        assert!((&d1m + d1m.transpose()).amax() == 0.0);
        let d2m = diff2_matrix(l, n);
        assert!((&d2m - d2m.transpose()).amax() == 0.0);
    }

    #[test]
    fn basis_is_orthonormal_and_mean_free() {
        let q = zero_mean_basis(64);
        let g = q.transpose() * &q;
        assert!((g - DMatrix::identity(63, 63)).amax() < 1e-13);
        for c in q.column_iter() {
            assert!(c.sum().abs() < 1e-13);
        }
    }

    #[test]
    fn fft_ops() {
        let (l, n) = (3.0, 32);
        let sp = Spectral::new(l, n).unwrap();
        let x = grid_points(l, n);
        let k = 2.0 * PI * 2.0 / l;
        let u: Vec<f64> = x.iter().map(|x| (k * x).cos()).collect();
        let du = sp.derivative(&u);
        let ddu = sp.second_derivative(&u);
        let sh = sp.shift(&u, 0.3);
        for j in 0..n {
            assert!((du[j] + k * (k * x[j]).sin()).abs() < 1e-12);
            assert!((ddu[j] + k * k * u[j]).abs() < 1e-11);
            assert!((sh[j] - (k * (x[j] + 0.3)).cos()).abs() < 1e-13);
        }
        assert!((sp.integrate(&u)).abs() < 1e-14);
        // round trip of a shift
        let back = sp.shift(&sp.shift(&u, 0.77), -0.77);
        assert!(u.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}
