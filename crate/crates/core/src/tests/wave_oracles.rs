use super::oracles::trapezoid;
use super::{km, modulus_for_omega, params, standard_grid};
use crate::fourier::{max_abs, mean};
use crate::wave::{
    closed_form, dk_domega, energy_closed_form, integral_dphi_squared, ode_residual, quadrature_residual,
    sample_profile,
};

/// Sign changes of a periodic sequence, ignoring entries at roundoff level.
fn cyclic_sign_changes(v: &[f64]) -> usize {
    let tiny = 1e-12 * max_abs(v);
    let s: Vec<bool> = v.iter().filter(|x| x.abs() > tiny).map(|x| *x > 0.0).collect();
    (0..s.len()).filter(|&i| s[i] != s[(i + 1) % s.len()]).count()
}

#[test]
fn profiles_on_standard_grid() {
    for p in standard_grid() {
        let prof = sample_profile(&p, 256).unwrap();
        let sinh_max = prof.phi.iter().fold(0.0_f64, |m, f| m.max(f.sinh().abs()));
        assert!(ode_residual(&prof) < 1e-9 * sinh_max.max(1.0), "{} {}", p.length, p.k);
        assert!(quadrature_residual(&prof) < 1e-9, "{} {}", p.length, p.k);
        let m = max_abs(&prof.phi);
        assert!(mean(&prof.phi).abs() < 1e-12 * m);
        for j in 1..256 {
            assert!((prof.phi[256 - j] + prof.phi[j]).abs() < 1e-10);
        }
        assert_eq!(cyclic_sign_changes(&prof.phi), 2);
        assert_eq!(cyclic_sign_changes(&prof.dphi), 2);
    }
}

#[test]
fn closed_forms_match_quadrature() {
    for p in standard_grid() {
        let i = trapezoid(|x| p.dphi(x).powi(2), p.length, 256);
        let ic = integral_dphi_squared(&p);
        assert!((i - ic).abs() < 1e-8 * ic, "{} {}: {i} {ic}", p.length, p.k);
        let c2 = p.c * p.c;
        let e = 0.5 * trapezoid(|x| (1.0 + c2) * p.dphi(x).powi(2) - 2.0 * (p.cosh_phi(x) - 1.0), p.length, 256);
        let ec = energy_closed_form(&p);
        assert!((e - ec).abs() < 1e-7 * ec.abs(), "{} {}: {e} {ec}", p.length, p.k);
    }
}

#[test]
fn energy_signs() {
    for k in [0.1, 0.3, 0.5, 0.7, 0.9] {
        assert!(energy_closed_form(&params(0.5, k)) > 0.0);
    }
    // no wave exists at (6.2, 0.9) (omega > 1), but the formula itself is negative there
    assert!(closed_form::omega(6.2, km(0.9)) > 1.0);
    assert!(closed_form::energy(6.2, km(0.9)) < 0.0);
}

#[test]
fn energy_positive_for_every_admissible_wave() {
    for i in 1..60 {
        let l = 2.0 * std::f64::consts::PI * i as f64 / 60.0;
        for j in 1..100 {
            let k = j as f64 / 100.0;
            if closed_form::omega(l, km(k)) < 1.0 {
                assert!(closed_form::energy(l, km(k)) > 0.0, "{l} {k}");
            }
        }
    }
}

#[test]
fn dk_domega_against_inversion() {
    for (l, k) in [(std::f64::consts::PI, 0.5), (2.0, 0.8), (1.0, 0.1), (6.0, 0.3)] {
        let p = params(l, k);
        let h = 1e-5 * p.omega;
        let fd = (modulus_for_omega(l, p.omega + h) - modulus_for_omega(l, p.omega - h)) / (2.0 * h);
        let a = dk_domega(&p);
        assert!(a > 0.0);
        assert!((fd - a).abs() < 1e-6 * a, "{l} {k}: {fd} {a}");
        let hk = 1e-6 * k.min(1.0 - k);
        let dw = (closed_form::omega(l, km(k + hk)) - closed_form::omega(l, km(k - hk))) / (2.0 * hk);
        assert!((a * dw - 1.0).abs() < 1e-6);
    }
}

#[test]
fn integral_vanishes_and_grows() {
    let small = integral_dphi_squared(&params(3.0, 1e-5));
    assert!(small < 1e-8);
    let vals: Vec<f64> = (1..19).map(|i| integral_dphi_squared(&params(3.0, 0.05 * i as f64))).collect();
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
}
