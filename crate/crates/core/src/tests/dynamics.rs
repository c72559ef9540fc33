use std::f64::consts::PI;

use super::params;
use crate::evolution::{blowup_monitor, perturbation_growth, Evolver, GrowthOptions};
use crate::fourier::max_abs;
use crate::wave::sample_profile;
use crate::{FieldState, Integrator};

fn sine(ev: &Evolver, a: f64) -> FieldState {
    let l = ev.spectral().length();
    let u = ev.points().iter().map(|x| a * (2.0 * PI * x / l).sin()).collect();
    ev.state(u, vec![0.0; ev.n()]).unwrap()
}

fn drift(ev: &Evolver, s0: &FieldState, steps: usize) -> (f64, f64) {
    let (traj, err) = ev.run(s0, 1e-3, steps, 100);
    assert!(err.is_none());
    let de = traj.iter().map(|s| (ev.energy(s) - s0.e0).abs()).fold(0.0, f64::max);
    let df = traj.iter().map(|s| (ev.momentum(s) - s0.f0).abs()).fold(0.0, f64::max);
    (de / s0.e0.abs().max(1.0), df / s0.f0.abs().max(1.0))
}

#[test]
fn invariants_conserved() {
    let ev = Evolver::new(PI, 128, Integrator::Yoshida4).unwrap();
    let (de, df) = drift(&ev, &ev.wave_state(&params(PI, 0.5)).unwrap(), 2000);
    assert!(de < 1e-7 && df < 1e-7, "{de} {df}");
    // max |u0| = 2.5 with a moving component
    let l = PI;
    let x = ev.points();
    let u: Vec<f64> = x.iter().map(|x| 2.5 * (2.0 * PI * x / l).sin()).collect();
    let v: Vec<f64> = x.iter().map(|x| (4.0 * PI * x / l).cos()).collect();
    let s = ev.state(u, v).unwrap();
    let (de, df) = drift(&ev, &s, 2000);
    assert!(de < 1e-7 && df < 1e-7, "{de} {df}");
}

fn error_at(integ: Integrator, dt: f64, reference: &FieldState) -> f64 {
    let ev = Evolver::new(2.0, 64, integ).unwrap();
    let s0 = sine(&ev, 1.0);
    let steps = (reference.t / dt).round() as usize;
    let (traj, _) = ev.run(&s0, dt, steps, steps);
    let s = traj.last().unwrap();
    let d: Vec<f64> = s.u.iter().zip(&reference.u).map(|(a, b)| a - b).collect();
    max_abs(&d)
}

#[test]
fn observed_order() {
    let ev = Evolver::new(2.0, 64, Integrator::Yoshida4).unwrap();
    let (traj, _) = ev.run(&sine(&ev, 1.0), 1e-4, 5000, 5000);
    let reference = traj.last().unwrap().clone();
    for (integ, dts) in [(Integrator::Strang, [0.02, 0.01]), (Integrator::Yoshida4, [0.05, 0.025])] {
        let e1 = error_at(integ, dts[0], &reference);
        let e2 = error_at(integ, dts[1], &reference);
        let p = (e1 / e2).log2();
        assert!((p - integ.order() as f64).abs() < 0.2, "{integ:?}: {e1} {e2} order {p}");
    }
}

#[test]
fn stable_wave_persists() {
    let p = params(PI, 0.3);
    let ev = Evolver::new(PI, 128, Integrator::Yoshida4).unwrap();
    let phi = sample_profile(&p, 128).unwrap().phi;
    let (traj, err) = ev.run(&ev.wave_state(&p).unwrap(), 1e-3, 1000, 50);
    assert!(err.is_none());
    let worst = traj.iter().map(|s| ev.deviation(s, &phi, p.c)).fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn growth_follows_pencil() {
    let p = params(PI, 0.95);
    let opts = GrowthOptions { n: 128, ..Default::default() };
    let g = perturbation_growth(&p, &opts).unwrap();
    let re = g.pencil_max_re.unwrap();
    assert!(re > 1e-3);
    assert!((g.sigma - re).abs() < 0.2 * re, "{} {re}", g.sigma);
    let half = perturbation_growth(&p, &GrowthOptions { epsilon: 0.5e-6, with_pencil: false, ..opts }).unwrap();
    assert!((half.sigma - g.sigma).abs() < 0.05 * g.sigma, "{} {}", half.sigma, g.sigma);
}

#[test]
fn stable_wave_does_not_grow() {
    let opts = GrowthOptions { n: 128, t_max: 5.0, with_pencil: false, ..Default::default() };
    let g = perturbation_growth(&params(PI, 0.3), &opts).unwrap();
    assert!(g.sigma < 0.05, "{}", g.sigma);
}

#[test]
fn negative_energy_grows_until_guard() {
    let ev = Evolver::new(PI, 64, Integrator::Yoshida4).unwrap();
    let a = (1..200).map(|i| 0.1 * i as f64).find(|&a| sine(&ev, a).e0 < 0.0).unwrap();
    let s0 = sine(&ev, a + 0.5);
    assert!(s0.e0 < 0.0);
    let (traj, err) = ev.run(&s0, 1e-4, 20_000, 10);
    assert!(matches!(err, Some(crate::Error::BlowUp { .. })), "no overflow by t = {}", traj.last().unwrap().t);
    let m = ev.conserved_prefix(&traj, 1e-8);
    assert!(m > traj.len() / 2);
    let rep = blowup_monitor(&traj[..m]);
    assert!(rep.lambda.windows(2).all(|w| w[1] > w[0]));
    assert!(rep.inequality_holds && rep.log_convex && rep.superlinear);
    assert!(rep.min_exact_residual > 0.0, "{}", rep.min_exact_residual);
}

#[test]
fn small_positive_energy_stays_bounded() {
    let ev = Evolver::new(PI, 64, Integrator::Yoshida4).unwrap();
    let s0 = sine(&ev, 0.3);
    assert!(s0.e0 > 0.0);
    let (traj, err) = ev.run(&s0, 1e-2, 2000, 10);
    assert!(err.is_none());
    assert!(traj.iter().all(|s| s.max_u() < 1.0));
}
