use super::standard_grid;
use crate::period_map::{period, period_derivative, theta_via_ivp};
use crate::wave::{make_params, Branch};

#[test]
fn derivative_negative_on_sweep() {
    for b in [0.1, 0.5, 1.0, 5.0, 10.0] {
        for w in [0.1, 0.5, 0.9] {
            assert!(period_derivative(b, w).unwrap() < 0.0, "{b} {w}");
        }
    }
}

#[test]
fn derivative_matches_quadratic_fit() {
    // least-squares parabola through 5 samples; its slope at the centre
    for (b, w) in [(1.0, 0.5), (0.1, 0.25), (10.0, 0.25)] {
        let h = 1e-3 * b;
        let ts = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let ys: Vec<f64> = ts.iter().map(|t| period(b + t * h, w).unwrap()).collect();
        // symmetric nodes: slope = sum t y / sum t^2
        let slope = ts.iter().zip(&ys).map(|(t, y)| t * y).sum::<f64>() / 10.0 / h;
        let d = period_derivative(b, w).unwrap();
        assert!((slope - d).abs() < 1e-4 * d.abs(), "{b} {w}: {slope} {d}");
    }
}

#[test]
fn round_trip_on_grid() {
    for p in standard_grid() {
        let l = period(p.energy_level, p.omega).unwrap();
        assert!((l - p.length).abs() < 1e-8 * p.length, "{} {}: {l}", p.length, p.k);
    }
}

#[test]
fn theta_equals_minus_derivative_on_grid() {
    for p in standard_grid() {
        let th = theta_via_ivp(&p).unwrap();
        let d = period_derivative(p.energy_level, p.omega).unwrap();
        assert!(th > 0.0);
        assert!((th + d).abs() < 1e-5 * th, "{} {}: {th} {d}", p.length, p.k);
    }
}

#[test]
fn theta_independent_of_branch() {
    let k = crate::EllipticModulus::new(0.8).unwrap();
    let a = theta_via_ivp(&make_params(2.0, k, Branch::Positive).unwrap()).unwrap();
    let b = theta_via_ivp(&make_params(2.0, k, Branch::Negative).unwrap()).unwrap();
    assert_eq!(a, b);
}
