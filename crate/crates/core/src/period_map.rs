//! Period function of the planar orbits `omega phi'' + sinh phi = 0`, its
//! derivative, and the Floquet constant theta from the linearised ODE.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ode::Dopri5;
use crate::wave::WaveParams;

/// Orbit at energy level B: turning points where B + (1 - cosh phi)/omega = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarLevel {
    #[serde(rename = "B")]
    pub energy_level: f64,
    pub omega: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
}

pub fn turning_points(energy_level: f64, omega: f64) -> Result<PlanarLevel> {
    if !(energy_level > 0.0 && energy_level.is_finite()) {
        return Err(domain(format!("energy level B = {energy_level} must be positive")));
    }
    if !(omega > 0.0 && omega < 1.0) {
        return Err(domain(format!("omega = {omega} outside (0, 1)")));
    }
    // arccosh(1 + x) without cancellation for small x
    let x = omega * energy_level;
    let phi_plus = (x + (x * (x + 2.0)).sqrt()).ln_1p();
    Ok(PlanarLevel {
        energy_level,
        omega,
        phi_plus,
        phi_minus: -phi_plus,
    })
}

impl PlanarLevel {
    /// B + (1 - cosh phi_plus)/omega, which should vanish.
    pub fn residual(&self) -> f64 {
        let cm1 = 2.0 * (0.5 * self.phi_plus).sinh().powi(2);
        self.energy_level - cm1 / self.omega
    }
}

fn q(y: f64) -> f64 {
    if y == 0.0 {
        1.0
    } else if y > 700.0 {
        2.0 * y * (-y).exp()
    } else {
        y / y.sinh()
    }
}

/// Full period of the orbit at level B.
///
/// With phi = A s, s in [-1, 1], the potential gap is
/// (cosh A - cosh phi)/omega = 2 sinh((A+phi)/2) sinh((A-phi)/2)/omega; putting
/// s = sin psi turns the endpoint singularities into a smooth periodic integrand:
/// l = sqrt(omega) int_0^{2 pi} sqrt(q(A(1+sin psi)/2) q(A(1-sin psi)/2)) dpsi,
/// q(y) = y / sinh y. The trapezoid rule then converges geometrically.
pub fn period(energy_level: f64, omega: f64) -> Result<f64> {
    let lvl = turning_points(energy_level, omega)?;
    let a = lvl.phi_plus;
    let f = |psi: f64| {
        let s = psi.sin();
        (q(0.5 * a * (1.0 + s)) * q(0.5 * a * (1.0 - s))).sqrt()
    };
    let mut m = 16usize;
    let mut sum: f64 = (0..m).map(|j| f(2.0 * PI * j as f64 / m as f64)).sum();
    let mut prev = 2.0 * PI * sum / m as f64;
    while m < 1 << 22 {
        // new midpoints only
        sum += (0..m)
            .map(|j| f(2.0 * PI * (j as f64 + 0.5) / m as f64))
            .sum::<f64>();
        m *= 2;
        let cur = 2.0 * PI * sum / m as f64;
        if (cur - prev).abs() <= 1e-15 * cur.abs() {
            return Ok(omega.sqrt() * cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "period integral at B = {energy_level}, omega = {omega} not converged"
    )))
}

/// d l / d B by a 5-point centred stencil, h = max(1e-5, 1e-5 B) (shrunk for tiny B).
pub fn period_derivative(energy_level: f64, omega: f64) -> Result<f64> {
    turning_points(energy_level, omega)?;
    let h = (1e-5f64).max(1e-5 * energy_level).min(0.25 * energy_level);
    let l = |d: f64| period(energy_level + d * h, omega);
    Ok((-l(2.0)? + 8.0 * l(1.0)? - 8.0 * l(-1.0)? + l(-2.0)?) / (12.0 * h))
}

/// theta = y(L)/phi'(0) for -y'' - cosh(phi) y / omega = 0, y(0) = 0, y'(0) = 1/phi'(0).
pub fn theta_via_ivp(params: &WaveParams) -> Result<f64> {
    let p = *params;
    let d0 = 2.0 * p.k * p.b; // phi'(0)
    let y = Dopri5::default().integrate(
        |x, y| [y[1], -p.cosh_phi(x) * y[0] / p.omega],
        0.0,
        [0.0, 1.0 / d0],
        p.length,
    )?;
    Ok(y[0] / d0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::EllipticModulus;
    use crate::wave::{make_params, Branch};

    fn params(l: f64, k: f64) -> WaveParams {
        make_params(l, EllipticModulus::new(k).unwrap(), Branch::Positive).unwrap()
    }

    #[test]
    fn turning_point_closed_form() {
        let lvl = turning_points(1.0, 0.5).unwrap();
        assert!((lvl.phi_plus - 1.5f64.acosh()).abs() < 1e-15);
        assert_eq!(lvl.phi_minus, -lvl.phi_plus);
        assert!(lvl.residual().abs() < 1e-12);
        assert!(turning_points(1e-14, 0.5).unwrap().phi_plus < 1e-6);
        assert!(turning_points(0.0, 0.5).is_err());
        assert!(turning_points(1.0, 1.0).is_err());
    }

    #[test]
    fn crest_matches_wave() {
        let p = params(PI, 0.5);
        let lvl = turning_points(p.energy_level, p.omega).unwrap();
        assert!((lvl.phi_plus - p.phi_max()).abs() < 1e-10);
        assert!((lvl.phi_plus - p.phi(p.length / 4.0)).abs() < 1e-10);
    }

    #[test]
    fn harmonic_limit() {
        let w = 0.3;
        assert!((period(1e-10, w).unwrap() - 2.0 * PI * w.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn round_trips() {
        for (l, k) in [(PI, 0.5), (2.0, 0.8), (0.5, 0.99)] {
            let p = params(l, k);
            assert!((period(p.energy_level, p.omega).unwrap() - l).abs() < 1e-8 * l);
        }
    }

    #[test]
    fn derivative_negative() {
        assert!(period_derivative(1.0, 0.5).unwrap() < 0.0);
        for b in [0.1, 1.0, 10.0] {
            assert!(period_derivative(b, 0.25).unwrap() < 0.0);
        }
    }

    #[test]
    fn theta_positive_and_matches() {
        let p = params(PI, 0.5);
        let th = theta_via_ivp(&p).unwrap();
        assert!(th > 0.0);
        let dl = period_derivative(p.energy_level, p.omega).unwrap();
        assert!((th + dl).abs() < 1e-5 * th);
        assert!((th - 0.0883039249).abs() < 1e-8);
    }
}
