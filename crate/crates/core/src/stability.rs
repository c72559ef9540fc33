//! From spectra to a verdict: D1, the threshold function r(k, L) and its root
//! k0, the 3x3 matrix D, the Hamiltonian–Krein index, and the quadratic pencil
//! as an independent check.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{complete_integrals, EllipticModulus, K_MAX};
use crate::error::{domain, Error, Result};
use crate::fourier::FourierGrid;
use crate::ode::Dopri5;
use crate::operators;
use crate::wave::{closed_form, dk_domega, integral_dphi_squared, sample_profile, WaveParams, WaveProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
        })
    }
}

/// Integrate -omega f'' - cosh(phi) f = 1, f(0) = f'(0) = 0 over one period.
/// Returns (int f, |f(L)| + |f'(L)|, max |f|).
fn d1_ivp(omega: f64, length: f64, cosh_phi: impl Fn(f64) -> f64) -> Result<(f64, f64, f64)> {
    let mut fmax = 0.0_f64;
    let y = Dopri5 {
        rtol: 1e-12,
        atol: 1e-14,
        ..Dopri5::default()
    }
    .integrate_observed(
        |x, y| [y[1], -(1.0 + cosh_phi(x) * y[0]) / omega, y[0]],
        0.0,
        [0.0, 0.0, 0.0],
        length,
        |_, y| fmax = fmax.max(y[0].abs()),
    )?;
    Ok((y[2], y[0].abs() + y[1].abs(), fmax))
}

/// D1 = (L1^{-1} 1, 1) from the periodic solution of the forced IVP.
pub fn d1_via_ivp(profile: &WaveProfile) -> Result<f64> {
    let p = profile.params;
    let (d1, miss, fmax) = d1_ivp(p.omega, p.length, |x| p.cosh_phi(x))?;
    let bound = 1e-7 * fmax;
    if miss >= bound {
        return Err(Error::Periodicity {
            residual: miss,
            bound,
        });
    }
    Ok(d1)
}

/// The same quantity through x = (L/pi) s: the rescaled problem lives on
/// [0, pi] with omega pi^2/L^2, and D1 = (L/pi) int_0^pi p(s) ds.
pub fn d1_rescaled(params: &WaveParams) -> Result<f64> {
    let p = *params;
    let s = p.length / PI;
    let (int, miss, fmax) = d1_ivp(p.omega / (s * s), PI, |t| p.cosh_phi(s * t))?;
    if miss >= 1e-7 * fmax {
        return Err(Error::Periodicity {
            residual: miss,
            bound: 1e-7 * fmax,
        });
    }
    Ok(s * int)
}

/// D1 from the assembled L1 matrix, inverted on the complement of its kernel.
pub fn d1_discrete(profile: &WaveProfile, grid: &FourierGrid) -> Result<f64> {
    let m = operators::assemble_l1(profile, grid)?;
    let eig = m.symmetric_eigen();
    let lmax = eig.eigenvalues.amax().max(1.0);
    let tol = 1e3 * f64::EPSILON * lmax;
    let ones = DVector::from_element(grid.n, 1.0);
    let mut s = 0.0;
    for (i, l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > tol {
            s += eig.eigenvectors.column(i).dot(&ones).powi(2) / l;
        }
    }
    Ok(s * grid.spacing())
}

/// r(k, L) = k^2 L^2 - 16 (1 - k^2) [k^2 K^2 - (K - E)^2].
pub fn r_function(k: EllipticModulus, length: f64) -> f64 {
    let ci = complete_integrals(k);
    let kv = k.value();
    let kp2 = (1.0 - kv) * (1.0 + kv);
    kv * kv * length * length - 16.0 * kp2 * (kv * kv * ci.k * ci.k - ci.k_minus_e * ci.k_minus_e)
}

/// L^2 - 16 f(k), f = (1 - k^2) K^2 - 2 E K + 2 E^2; tends to L^2 - 4 pi^2 as k -> 0.
pub fn r_bracket(k: EllipticModulus, length: f64) -> f64 {
    let ci = complete_integrals(k);
    let kv = k.value();
    let kp2 = (1.0 - kv) * (1.0 + kv);
    let f = kp2 * ci.k * ci.k - 2.0 * ci.e * ci.k + 2.0 * ci.e * ci.e;
    length * length - 16.0 * f
}

fn r_at(k: f64, length: f64) -> f64 {
    r_function(EllipticModulus::new(k).expect("k inside (0,1)"), length)
}

/// Root of r(., L) in (0, 1), to 1e-12. Returns the upper end of the final
/// bracket, where r >= 0, so the returned k0 itself classifies as unstable.
pub fn find_k0(length: f64) -> Result<f64> {
    if !(length > 0.0 && length < 2.0 * PI) {
        return Err(domain(format!("period L = {length} outside (0, 2 pi)")));
    }
    let (mut lo, mut hi) = (1e-6, K_MAX);
    if r_at(lo, length) >= 0.0 || r_at(hi, length) <= 0.0 {
        return Err(Error::Bracketing(format!("r(., {length}) has no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if r_at(mid, length) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k0 = hi;
    for i in 1..=200 {
        let t = i as f64 / 201.0;
        let below = k0 * t;
        let above = k0 + (K_MAX - k0) * t;
        if r_at(below, length) >= 0.0 || r_at(above, length) <= 0.0 {
            return Err(Error::Bracketing(format!(
                "r(., {length}) changes sign more than once (near k = {below} or {above})"
            )));
        }
    }
    Ok(k0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixD {
    /// diagonal of D
    pub diagonal: [f64; 3],
    pub n_d: usize,
    pub det: f64,
}

/// d/dk int (phi')^2, by the closed K', E' identities.
fn di_dk(params: &WaveParams) -> f64 {
    closed_form::dphi_squared_integral_dk(params.length, params.modulus())
}

/// int (phi')^2 - 2 c^2 (d omega/dk)^{-1} d/dk int (phi')^2.
pub fn first_entry(params: &WaveParams) -> f64 {
    integral_dphi_squared(params) - 2.0 * params.c * params.c * dk_domega(params) * di_dk(params)
}

/// `first_entry` with the k-derivative taken by centred differences.
pub fn first_entry_fd(params: &WaveParams) -> f64 {
    let k = params.k;
    let h = 1e-5 * k.min(1.0 - k);
    let i = |kk: f64| closed_form::dphi_squared_integral(params.length, EllipticModulus::new(kk).expect("k in range"));
    let d = (i(k + h) - i(k - h)) / (2.0 * h);
    integral_dphi_squared(params) - 2.0 * params.c * params.c * dk_domega(params) * d
}

/// det D in factored form D1 L (64 K^3 / (L^3 (K - E))) r(k, L).
pub fn det_d_factored(params: &WaveParams, d1: f64) -> f64 {
    let ci = complete_integrals(params.modulus());
    let l = params.length;
    d1 * l * 64.0 * ci.k.powi(3) / (l.powi(3) * ci.k_minus_e) * r_function(params.modulus(), l)
}

pub fn matrix_d(params: &WaveParams, d1: f64) -> MatrixD {
    let diagonal = [first_entry(params), d1, params.length];
    MatrixD {
        diagonal,
        n_d: diagonal.iter().filter(|&&x| x < 0.0).count(),
        det: diagonal.iter().product(),
    }
}

/// d''(c) = -d/dc (c int (phi')^2), which is minus the first entry of D.
pub fn d_second_derivative(params: &WaveParams) -> f64 {
    -first_entry(params)
}

/// (K_Ham, verdict) from n(L) and n(D).
pub fn hamiltonian_krein(n_l: usize, n_d: usize) -> Result<(i64, Verdict)> {
    let k = n_l as i64 - n_d as i64;
    match k {
        0 => Ok((0, Verdict::Stable)),
        1 => Ok((1, Verdict::Unstable)),
        _ => Err(Error::Inconsistent(format!(
            "K_Ham = n(L) - n(D) = {n_l} - {n_d} = {k}, expected 0 or 1"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilSpectrum {
    pub eigenvalues: Vec<Complex64>,
    pub max_re: f64,
    pub spectral_radius: f64,
}

impl PencilSpectrum {
    fn new(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let max_re = eigenvalues.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re));
        let spectral_radius = eigenvalues.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        Self {
            eigenvalues,
            max_re,
            spectral_radius,
        }
    }

    pub fn max_abs_re(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, z| m.max(z.re.abs()))
    }

    /// Real-part threshold separating "on the imaginary axis" from growth.
    pub fn tol_re(&self) -> f64 {
        1e-6 * self.spectral_radius.max(1.0)
    }

    pub fn is_unstable(&self) -> bool {
        self.max_re > self.tol_re()
    }

    /// Largest distance from some lambda to the nearest of -lambda and conj(lambda), scaled by 1/max(1, |lambda|).
    pub fn symmetry_defect(&self) -> f64 {
        let ev = &self.eigenvalues;
        let nearest = |t: Complex64| ev.iter().fold(f64::INFINITY, |m, z| m.min((z - t).norm()));
        ev.iter()
            .map(|&z| nearest(-z).max(nearest(z.conj())) / z.norm().max(1.0))
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        use crate::output::fmt17;
        writeln!(w, "re,im")?;
        for z in &self.eigenvalues {
            writeln!(w, "{},{}", fmt17(z.re), fmt17(z.im))?;
        }
        Ok(())
    }
}

/// Companion matrix [[0, I], [A0, A1]] of
/// lambda^2 g + 2 c lambda g' - omega g'' - cosh(phi) g + mean(cosh(phi) g) = 0
/// in the mean-free basis, where the mean term drops out.
pub fn pencil_companion(profile: &WaveProfile, grid: &FourierGrid) -> Result<DMatrix<f64>> {
    if !grid.zero_mean {
        return Err(domain("pencil lives on the zero-mean subspace; use a zero_mean grid"));
    }
    let p = if profile.n == grid.n {
        profile.clone()
    } else {
        sample_profile(&profile.params, grid.n)?
    };
    let (w, c) = (p.params.omega, p.params.c);
    let q = grid.zero_mean_basis();
    let mut a0 = grid.diff2_matrix() * w;
    for (j, v) in p.cosh_phi().iter().enumerate() {
        a0[(j, j)] += v;
    }
    let a0 = q.transpose() * a0 * &q;
    let a1 = q.transpose() * (grid.diff1_matrix() * (-2.0 * c)) * &q;
    let d = q.ncols();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, d), (d, d)).fill_with_identity();
    m.view_mut((d, 0), (d, d)).copy_from(&a0);
    m.view_mut((d, d), (d, d)).copy_from(&a1);
    Ok(m)
}

/// J L_Pi with J = [[0, I], [-I, 0]]; same spectrum as the companion form.
pub fn pencil_hamiltonian(profile: &WaveProfile, grid: &FourierGrid) -> Result<DMatrix<f64>> {
    let l = operators::assemble_l_pi(profile, profile.params.c, grid)?;
    let d = l.nrows() / 2;
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, 2 * d)).copy_from(&l.view((d, 0), (d, 2 * d)));
    m.view_mut((d, 0), (d, 2 * d)).copy_from(&(-l.view((0, 0), (d, 2 * d))));
    Ok(m)
}

pub fn eigenvalues_general(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let dim = m.nrows();
    let schur = m
        .try_schur(f64::EPSILON, 1000 * dim)
        .ok_or_else(|| Error::Eigensolver(format!("Schur iteration did not converge (dim {dim})")))?;
    let ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    if ev.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Eigensolver("non-finite pencil eigenvalue".into()));
    }
    Ok(ev)
}

pub fn pencil_spectrum(profile: &WaveProfile, grid: &FourierGrid) -> Result<PencilSpectrum> {
    Ok(PencilSpectrum::new(eigenvalues_general(pencil_companion(profile, grid)?)?))
}

pub fn pencil_spectrum_hamiltonian(profile: &WaveProfile, grid: &FourierGrid) -> Result<PencilSpectrum> {
    Ok(PencilSpectrum::new(eigenvalues_general(pencil_hamiltonian(profile, grid)?)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub params: WaveParams,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D1")]
    pub d1: f64,
    #[serde(rename = "D_diagonal")]
    pub d_diagonal: [f64; 3],
    #[serde(rename = "det_D")]
    pub det_d: f64,
    #[serde(rename = "n_D")]
    pub n_d: usize,
    #[serde(rename = "n_L")]
    pub n_l: usize,
    pub r_value: f64,
    pub k0: f64,
    #[serde(rename = "K_Ham")]
    pub k_ham: i64,
    pub verdict: Verdict,
    pub pencil_max_re: Option<f64>,
    pub pencil_spectral_radius: Option<f64>,
}

/// The whole chain at one (L, k): D1, r, k0, D, n(L), K_Ham, optionally the pencil.
pub fn analyze(params: &WaveParams, n: usize, with_pencil: bool) -> Result<StabilityReport> {
    let profile = sample_profile(params, n)?;
    let d1 = d1_via_ivp(&profile)?;
    let k0 = find_k0(params.length)?;
    let d = matrix_d(params, d1);
    let grid = FourierGrid::new(params.length, n, false)?;
    let spec = operators::spectrum_l_full(&profile, params.c, &grid)?;
    let (k_ham, verdict) = hamiltonian_krein(spec.n_neg, d.n_d)?;
    let pencil = if with_pencil {
        let gz = FourierGrid::new(params.length, n, true)?;
        Some(pencil_spectrum(&profile, &gz)?)
    } else {
        None
    };
    Ok(StabilityReport {
        params: *params,
        n,
        d1,
        d_diagonal: d.diagonal,
        det_d: d.det,
        n_d: d.n_d,
        n_l: spec.n_neg,
        r_value: r_function(params.modulus(), params.length),
        k0,
        k_ham,
        verdict,
        pencil_max_re: pencil.as_ref().map(|p| p.max_re),
        pencil_spectral_radius: pencil.as_ref().map(|p| p.spectral_radius),
    })
}
