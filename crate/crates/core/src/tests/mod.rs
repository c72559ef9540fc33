//! Cross-module checks against independent oracles, and property tests.

mod dynamics;
mod elliptic_oracles;
mod period_oracles;
mod wave_oracles;

use crate::{make_params, Branch, EllipticModulus, WaveParams};

pub fn km(k: f64) -> EllipticModulus {
    EllipticModulus::new(k).unwrap()
}

pub fn params(l: f64, k: f64) -> WaveParams {
    make_params(l, km(k), Branch::Positive).unwrap()
}

/// {1,2,3,4,6} x {0.1,...,0.9} without the pairs where omega >= 1.
pub fn standard_grid() -> Vec<WaveParams> {
    let mut out = vec![];
    for l in [1.0, 2.0, 3.0, 4.0, 6.0] {
        for k in [0.1, 0.3, 0.5, 0.7, 0.9] {
            if let Ok(p) = make_params(l, km(k), Branch::Positive) {
                out.push(p);
            }
        }
    }
    out
}

/// k with omega(L, k) = w, by bisection on the closed form.
pub fn modulus_for_omega(l: f64, w: f64) -> f64 {
    let om = |k: f64| crate::wave::closed_form::omega(l, km(k));
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if om(mid) < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn standard_grid_skips_inadmissible() {
    let g = standard_grid();
    assert_eq!(g.len(), 21);
    for (l, k) in [(4.0, 0.9), (6.0, 0.5), (6.0, 0.7), (6.0, 0.9)] {
        assert!(!g.iter().any(|p| p.length == l && p.k == k));
    }
}
