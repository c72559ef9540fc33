//! Collocation matrices for the linearised operators and their
//! negative/zero eigenvalue bookkeeping.
//!
//! * `L1 = -omega d_xx - cosh(phi)`
//! * `L  = [[-d_xx - cosh(phi), c d_x], [-c d_x, 1]]`
//! * `L_Pi` = L restricted to mean-free pairs, where the mean correction
//!   `(1/L) int cosh(phi) g` vanishes after projection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fourier::FourierGrid;
use crate::wave::{sample_profile, WaveProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub operator: String,
    /// ascending
    pub eigenvalues: Vec<f64>,
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
    pub tol_zero: f64,
    /// |cos| of the angle between the computed kernel vector and the analytic one
    pub kernel_alignment: f64,
    /// ||M w|| / ||w|| for the analytic kernel candidate w
    pub kernel_residual: f64,
    /// negative and zero eigenvalues separated by more than 100 tol_zero
    pub simple: bool,
}

impl SpectrumReport {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,eigenvalue")?;
        for (i, l) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{i},{}", crate::output::fmt17(*l))?;
        }
        Ok(())
    }
}

fn matching_profile(profile: &WaveProfile, grid: &FourierGrid) -> Result<WaveProfile> {
    let l = profile.params.length;
    if (grid.length - l).abs() > 1e-12 * l {
        return Err(domain(format!(
            "grid length {} differs from wave period {l}",
            grid.length
        )));
    }
    if grid.n == profile.n {
        Ok(profile.clone())
    } else {
        sample_profile(&profile.params, grid.n)
    }
}

fn check_speed(profile: &WaveProfile, c: f64) -> Result<()> {
    let w = profile.params.omega;
    if (c * c - (1.0 - w)).abs() > 1e-10 {
        return Err(domain(format!("c = {c} inconsistent with omega = {w}")));
    }
    Ok(())
}

fn require_zero_mean(grid: &FourierGrid) -> Result<()> {
    if grid.zero_mean {
        Ok(())
    } else {
        Err(domain("operator lives on the zero-mean subspace; use a zero_mean grid"))
    }
}

/// `-omega D2 - diag(potential)`.
pub fn assemble_l1_with_potential(omega: f64, potential: &[f64], grid: &FourierGrid) -> Result<DMatrix<f64>> {
    if potential.len() != grid.n {
        return Err(Error::DimensionMismatch {
            expected: grid.n,
            got: potential.len(),
        });
    }
    let mut m = grid.diff2_matrix() * (-omega);
    for (j, v) in potential.iter().enumerate() {
        m[(j, j)] -= v;
    }
    Ok(m)
}

pub fn assemble_l1(profile: &WaveProfile, grid: &FourierGrid) -> Result<DMatrix<f64>> {
    let p = matching_profile(profile, grid)?;
    assemble_l1_with_potential(p.params.omega, &p.cosh_phi(), grid)
}

pub fn assemble_l_full(profile: &WaveProfile, c: f64, grid: &FourierGrid) -> Result<DMatrix<f64>> {
    check_speed(profile, c)?;
    let p = matching_profile(profile, grid)?;
    let n = grid.n;
    let top = assemble_l1_with_potential(1.0, &p.cosh_phi(), grid)?;
    let d1 = grid.diff1_matrix() * c;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&top);
    m.view_mut((0, n), (n, n)).copy_from(&d1);
    m.view_mut((n, 0), (n, n)).copy_from(&(-d1));
    m.view_mut((n, n), (n, n)).fill_with_identity();
    Ok(m)
}

/// blockdiag(Q, Q) with Q the orthonormal mean-free basis.
pub fn pair_basis(grid: &FourierGrid) -> DMatrix<f64> {
    let q = grid.zero_mean_basis();
    let (n, d) = q.shape();
    let mut b = DMatrix::zeros(2 * n, 2 * d);
    b.view_mut((0, 0), (n, d)).copy_from(&q);
    b.view_mut((n, d), (n, d)).copy_from(&q);
    b
}

pub fn assemble_l_pi(profile: &WaveProfile, c: f64, grid: &FourierGrid) -> Result<DMatrix<f64>> {
    require_zero_mean(grid)?;
    let full = assemble_l_full(profile, c, grid)?;
    let q = pair_basis(grid);
    Ok(symmetrized(q.transpose() * full * q))
}

/// Q^T M Q is symmetric only up to roundoff; restore it exactly.
fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Same operator built the other way: mean correction (1/N) 1 cosh(phi)^T added
/// to the top-left block before restricting to the mean-free basis.
pub fn assemble_l_pi_rank_one(profile: &WaveProfile, c: f64, grid: &FourierGrid) -> Result<DMatrix<f64>> {
    require_zero_mean(grid)?;
    let p = matching_profile(profile, grid)?;
    let n = grid.n;
    let mut full = assemble_l_full(&p, c, grid)?;
    let ch = p.cosh_phi();
    for i in 0..n {
        for (j, v) in ch.iter().enumerate() {
            full[(i, j)] += v / n as f64;
        }
    }
    let q = pair_basis(grid);
    Ok(symmetrized(q.transpose() * full * q))
}

pub fn assemble_l1_pi(profile: &WaveProfile, grid: &FourierGrid) -> Result<DMatrix<f64>> {
    require_zero_mean(grid)?;
    let q = grid.zero_mean_basis();
    Ok(symmetrized(q.transpose() * assemble_l1(profile, grid)? * q))
}

/// Symmetric eigenvalues, counts, and the kernel check against `candidate`.
///
/// tol_zero = max(1e3 eps max(1, |lambda|max), 10 ||M w||/||w||): roundoff of a
/// dense solve scales with the spectral radius, and the analytic kernel vector
/// w is only a discrete kernel up to its residual.
pub fn classify(operator: &str, m: &DMatrix<f64>, candidate: &DVector<f64>) -> Result<SpectrumReport> {
    let dim = m.nrows();
    if candidate.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: candidate.len(),
        });
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver(format!("{operator}: non-finite eigenvalue")));
    }
    ev.sort_by(f64::total_cmp);
    let lmax = ev.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
    let wn = candidate.norm();
    let residual = (m * candidate).norm() / wn;
    let tol = (1e3 * f64::EPSILON * lmax).max(10.0 * residual);

    if let Some(&v) = ev.iter().find(|x| x.abs() > tol && x.abs() <= 10.0 * tol) {
        return Err(Error::Ambiguous { value: v, tol });
    }
    let n_neg = ev.iter().filter(|&&x| x < -tol).count();
    let n_zero = ev.iter().filter(|&&x| x.abs() <= tol).count();
    let n_pos = dim - n_neg - n_zero;

    // every eigenvalue in the negative/zero cluster stays 100 tol from its neighbours
    let mut simple = true;
    for i in 0..(n_neg + n_zero).min(dim) {
        if i + 1 < dim && ev[i + 1] - ev[i] <= 100.0 * tol {
            simple = false;
        }
    }

    let kernel_alignment = if n_zero == 0 {
        0.0
    } else {
        let z = ev
            .iter()
            .copied()
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
            .expect("non-empty spectrum");
        let x = inverse_iteration(m, z + 1e-2 * tol)?;
        (x.dot(candidate) / (x.norm() * wn)).abs().min(1.0)
    };

    Ok(SpectrumReport {
        operator: operator.to_string(),
        eigenvalues: ev,
        n_neg,
        n_zero,
        n_pos,
        tol_zero: tol,
        kernel_alignment,
        kernel_residual: residual,
        simple,
    })
}

/// Eigenvector for the eigenvalue nearest `shift`.
pub fn inverse_iteration(m: &DMatrix<f64>, shift: f64) -> Result<DVector<f64>> {
    let dim = m.nrows();
    let mut a = m.clone();
    for i in 0..dim {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    // deterministic start with no special symmetry
    let mut x = DVector::from_fn(dim, |i, _| ((i as f64 + 1.0) * 0.618_033_988_75).fract() - 0.5);
    for _ in 0..4 {
        x = lu
            .solve(&x)
            .ok_or_else(|| Error::Eigensolver("singular shifted matrix in inverse iteration".into()))?;
        let nx = x.norm();
        if !nx.is_finite() || nx == 0.0 {
            return Err(Error::Eigensolver("inverse iteration diverged".into()));
        }
        x /= nx;
    }
    Ok(x)
}

pub fn spectrum_l1(profile: &WaveProfile, grid: &FourierGrid) -> Result<SpectrumReport> {
    let p = matching_profile(profile, grid)?;
    let m = assemble_l1(&p, grid)?;
    classify("L1", &m, &DVector::from_column_slice(&p.dphi))
}

/// Analytic kernel (phi', c phi'') of the full operator.
pub fn kernel_pair(profile: &WaveProfile, c: f64) -> DVector<f64> {
    let n = profile.n;
    DVector::from_fn(2 * n, |i, _| {
        if i < n {
            profile.dphi[i]
        } else {
            c * profile.d2phi[i - n]
        }
    })
}

pub fn spectrum_l_full(profile: &WaveProfile, c: f64, grid: &FourierGrid) -> Result<SpectrumReport> {
    let p = matching_profile(profile, grid)?;
    let m = assemble_l_full(&p, c, grid)?;
    classify("L", &m, &kernel_pair(&p, c))
}

pub fn spectrum_l_pi(profile: &WaveProfile, c: f64, grid: &FourierGrid) -> Result<SpectrumReport> {
    let p = matching_profile(profile, grid)?;
    let m = assemble_l_pi(&p, c, grid)?;
    let w = pair_basis(grid).transpose() * kernel_pair(&p, c);
    classify("L_Pi", &m, &w)
}

pub fn spectrum_l1_pi(profile: &WaveProfile, grid: &FourierGrid) -> Result<SpectrumReport> {
    let p = matching_profile(profile, grid)?;
    let m = assemble_l1_pi(&p, grid)?;
    let w = grid.zero_mean_basis().transpose() * DVector::from_column_slice(&p.dphi);
    classify("L1_Pi", &m, &w)
}
