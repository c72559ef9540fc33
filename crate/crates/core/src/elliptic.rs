//! Complete elliptic integrals and Jacobi elliptic functions, via the AGM.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest accepted modulus. Past ~0.999999 expect a few digits of loss.
pub const K_MAX: f64 = 1.0 - 1e-12;

/// A modulus `k` in the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EllipticModulus(f64);

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if k.is_finite() && k > 0.0 && k <= K_MAX {
            Ok(Self(k))
        } else {
            Err(domain(format!("modulus k = {k} outside (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// k' = sqrt(1 - k^2), computed without cancellation near k = 1.
    pub fn complementary(self) -> f64 {
        ((1.0 - self.0) * (1.0 + self.0)).sqrt()
    }
}

/// K, E and K - E together; K - E is summed directly so it stays accurate for small k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteIntegrals {
    pub k: f64,
    pub e: f64,
    pub k_minus_e: f64,
}

pub fn complete_integrals(k: EllipticModulus) -> CompleteIntegrals {
    // c_{n+1} = c_n^2 / (4 a_{n+1}) avoids the a - b cancellation.
    let (mut a, mut b, mut c) = (1.0_f64, k.complementary(), k.value());
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    for _ in 0..64 {
        if c <= f64::EPSILON * a {
            break;
        }
        let a_next = 0.5 * (a + b);
        b = (a * b).sqrt();
        c = c * c / (4.0 * a_next);
        a = a_next;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let kk = FRAC_PI_2 / a;
    let k_minus_e = kk * sum;
    CompleteIntegrals {
        k: kk,
        e: kk - k_minus_e,
        k_minus_e,
    }
}

pub fn complete_k(k: EllipticModulus) -> f64 {
    complete_integrals(k).k
}

pub fn complete_e(k: EllipticModulus) -> f64 {
    complete_integrals(k).e
}

pub fn complete_k_minus_e(k: EllipticModulus) -> f64 {
    complete_integrals(k).k_minus_e
}

/// (sn, cn, dn) at real `u` by descending Landen, after reducing u modulo 4K.
pub fn jacobi_sn_cn_dn(u: f64, k: EllipticModulus) -> (f64, f64, f64) {
    let m = k.value();
    let mut a = [0.0_f64; 32];
    let mut c = [0.0_f64; 32];
    a[0] = 1.0;
    c[0] = m;
    let mut b = k.complementary();
    let mut n = 0;
    while c[n] > f64::EPSILON * a[n] && n < 31 {
        let a_next = 0.5 * (a[n] + b);
        c[n + 1] = c[n] * c[n] / (4.0 * a_next);
        b = (a[n] * b).sqrt();
        a[n + 1] = a_next;
        n += 1;
    }
    let quarter = FRAC_PI_2 / a[n];
    let period = 4.0 * quarter;
    let u = u - period * (u / period).round();

    if n == 0 {
        let s = u.sin();
        return (s, u.cos(), (1.0 - m * m * s * s).sqrt());
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let (s, cc) = phi.sin_cos();
    // dn^2 = cn^2 + k'^2 sn^2: no cancellation anywhere, unlike the Landen ratio
    let kp = k.complementary();
    (s, cc, (cc * cc + kp * kp * s * s).sqrt())
}
