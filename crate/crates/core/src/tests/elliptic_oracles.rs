use std::f64::consts::PI;

use super::km;
use super::oracles::{quad_e, quad_k, rk4};
use crate::elliptic::{complete_e, complete_k, jacobi_sn_cn_dn};

fn grid() -> Vec<f64> {
    let mut ks: Vec<f64> = (1..=19).map(|i| 0.05 * i as f64).collect();
    ks.push(0.99);
    ks
}

#[test]
fn k_and_e_match_quadrature() {
    for k in grid() {
        let (a, b) = (complete_k(km(k)), quad_k(k));
        assert!((a - b).abs() < 1e-10 * b, "K({k}): {a} vs {b}");
        let (a, b) = (complete_e(km(k)), quad_e(k));
        assert!((a - b).abs() < 1e-10 * b, "E({k}): {a} vs {b}");
    }
}

#[test]
fn named_points() {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!((complete_k(km(r)) / quad_k(r) - 1.0).abs() < 1e-13);
    assert!((complete_k(km(0.999)) / quad_k(0.999) - 1.0).abs() < 1e-10);
    assert!((complete_e(km(0.5)) - quad_e(0.5)).abs() < 1e-12);
    assert!((complete_k(km(1e-8)) - PI / 2.0).abs() < 1e-14);
}

#[test]
fn sn_matches_ode() {
    let k = 0.6;
    let y = rk4(
        |_, y: &[f64; 3]| [y[1] * y[2], -y[0] * y[2], -k * k * y[0] * y[1]],
        [0.0, 1.0, 1.0],
        0.8,
        20_000,
    );
    let (s, c, d) = jacobi_sn_cn_dn(0.8, km(k));
    assert!((s - y[0]).abs() < 1e-13, "{s} {}", y[0]);
    assert!((c - y[1]).abs() < 1e-13);
    assert!((d - y[2]).abs() < 1e-13);
}

#[test]
fn sn_is_4k_periodic() {
    for k in [0.1, 0.5, 0.9, 0.999] {
        let kk = complete_k(km(k));
        for u in [-2.3, 0.1, 0.77, 3.9, 11.0] {
            let a = jacobi_sn_cn_dn(u, km(k));
            let b = jacobi_sn_cn_dn(u + 4.0 * kk, km(k));
            assert!((a.0 - b.0).abs() < 1e-11 && (a.1 - b.1).abs() < 1e-11);
        }
    }
}
