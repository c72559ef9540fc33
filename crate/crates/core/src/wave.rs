//! The explicit periodic wave `phi(x) = 2 artanh(k sn(b x; k))` and its
//! closed-form integrals.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::elliptic::{complete_integrals, jacobi_sn_cn_dn, EllipticModulus};
use crate::error::{domain, Result};
use crate::fourier::{self, Spectral};
use crate::output::fmt17;

/// Sign of the wave speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Positive,
    Negative,
    /// c = 0; never produced by `make_params` since omega < 1 there.
    Zero,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
            Branch::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    #[serde(rename = "L")]
    pub length: f64,
    pub k: f64,
    pub omega: f64,
    pub c: f64,
    /// spatial frequency 4K/L
    pub b: f64,
    /// quadrature constant (1+k^2)/(1-k^2)
    pub a: f64,
    /// energy level of the planar orbit, 2 k^2 b^2
    #[serde(rename = "B")]
    pub energy_level: f64,
    pub branch: Branch,
}

/// Builds the wave of period `length` and modulus `k`.
///
/// Fails when omega = L^2/(16 K^2 (1-k^2)) >= 1: that product grows without
/// bound as k -> 1, so large k has no wave at all for a given L.
pub fn make_params(length: f64, k: EllipticModulus, branch: Branch) -> Result<WaveParams> {
    if !(length > 0.0 && length < 2.0 * PI) {
        return Err(domain(format!("period L = {length} outside (0, 2 pi)")));
    }
    let omega = closed_form::omega(length, k);
    if omega >= 1.0 {
        return Err(domain(format!(
            "no wave for L = {length}, k = {}: omega = {omega} >= 1",
            k.value()
        )));
    }
    if branch == Branch::Zero {
        return Err(domain("c = 0 requires omega = 1, unreachable for L < 2 pi"));
    }
    let ci = complete_integrals(k);
    let kv = k.value();
    let kp2 = (1.0 - kv) * (1.0 + kv);
    let b = 4.0 * ci.k / length;
    Ok(WaveParams {
        length,
        k: kv,
        omega,
        c: branch.sign() * (1.0 - omega).sqrt(),
        b,
        a: (1.0 + kv * kv) / kp2,
        energy_level: 2.0 * kv * kv * b * b,
        branch,
    })
}

impl WaveParams {
    /// The wave whose planar orbit sits at level `energy_level` for frequency `omega`.
    pub fn from_level(energy_level: f64, omega: f64, branch: Branch) -> Result<Self> {
        if !(energy_level > 0.0 && energy_level.is_finite()) {
            return Err(domain(format!("energy level B = {energy_level} must be positive")));
        }
        if !(omega > 0.0 && omega < 1.0) {
            return Err(domain(format!("omega = {omega} outside (0, 1)")));
        }
        let bw = energy_level * omega;
        let k = EllipticModulus::new((bw / (2.0 + bw)).sqrt())?;
        let kp2 = 2.0 / (2.0 + bw);
        let length = 4.0 * crate::elliptic::complete_k(k) * (omega * kp2).sqrt();
        make_params(length, k, branch)
    }

    pub fn modulus(&self) -> EllipticModulus {
        EllipticModulus::new(self.k).expect("params hold a valid modulus")
    }

    fn sn_cn_dn(&self, x: f64) -> (f64, f64, f64) {
        jacobi_sn_cn_dn(self.b * x, self.modulus())
    }

    pub fn phi(&self, x: f64) -> f64 {
        2.0 * (self.k * self.sn_cn_dn(x).0).atanh()
    }

    pub fn dphi(&self, x: f64) -> f64 {
        let (_, cn, dn) = self.sn_cn_dn(x);
        2.0 * self.k * self.b * cn / dn
    }

    /// cosh(phi(x)) without forming phi.
    pub fn cosh_phi(&self, x: f64) -> f64 {
        let y2 = (self.k * self.sn_cn_dn(x).0).powi(2);
        (1.0 + y2) / (1.0 - y2)
    }

    pub fn sinh_phi(&self, x: f64) -> f64 {
        let y = self.k * self.sn_cn_dn(x).0;
        2.0 * y / (1.0 - y * y)
    }

    pub fn d2phi(&self, x: f64) -> f64 {
        -self.sinh_phi(x) / self.omega
    }

    /// Amplitude phi(L/4) = 2 artanh(k).
    pub fn phi_max(&self) -> f64 {
        2.0 * self.k.atanh()
    }

    /// Same wave travelling the other way.
    pub fn flipped(&self) -> Self {
        let mut p = *self;
        p.c = -p.c;
        p.branch = match p.branch {
            Branch::Positive => Branch::Negative,
            Branch::Negative => Branch::Positive,
            Branch::Zero => Branch::Zero,
        };
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub params: WaveParams,
    pub n: usize,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
    /// set for k > 0.999, where artanh loses digits near the crest
    pub low_precision: bool,
}

pub fn sample_profile(params: &WaveParams, n: usize) -> Result<WaveProfile> {
    if n < 32 || !n.is_multiple_of(2) {
        return Err(domain(format!("profile size N = {n} must be even and >= 32")));
    }
    let x = fourier::grid_points(params.length, n);
    let k = params.modulus();
    let mut phi = Vec::with_capacity(n);
    let mut dphi = Vec::with_capacity(n);
    let mut d2phi = Vec::with_capacity(n);
    for &xi in &x {
        let (sn, cn, dn) = jacobi_sn_cn_dn(params.b * xi, k);
        let y = params.k * sn;
        phi.push(2.0 * y.atanh());
        dphi.push(2.0 * params.k * params.b * cn / dn);
        d2phi.push(-2.0 * y / (1.0 - y * y) / params.omega);
    }
    Ok(WaveProfile {
        params: *params,
        n,
        x,
        phi,
        dphi,
        d2phi,
        low_precision: params.k > 0.999,
    })
}

impl WaveProfile {
    pub fn spacing(&self) -> f64 {
        self.params.length / self.n as f64
    }

    pub fn cosh_phi(&self) -> Vec<f64> {
        self.phi.iter().map(|p| p.cosh()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,phi,dphi,d2phi")?;
        for j in 0..self.n {
            writeln!(
                w,
                "{},{},{},{}",
                fmt17(self.x[j]),
                fmt17(self.phi[j]),
                fmt17(self.dphi[j]),
                fmt17(self.d2phi[j])
            )?;
        }
        Ok(())
    }
}

/// max |phi'^2 - (2/omega)(a - cosh phi)| over the grid.
pub fn quadrature_residual(profile: &WaveProfile) -> f64 {
    let p = &profile.params;
    profile
        .phi
        .iter()
        .zip(&profile.dphi)
        .map(|(f, df)| (df * df - 2.0 / p.omega * (p.a - f.cosh())).abs())
        .fold(0.0, f64::max)
}

/// max |omega phi'' + sinh phi| with phi'' taken spectrally from the phi samples,
/// so this genuinely tests the samples rather than the stored d2phi.
pub fn ode_residual(profile: &WaveProfile) -> f64 {
    let sp = Spectral::new(profile.params.length, profile.n).expect("profile grid is valid");
    let d2 = sp.second_derivative(&profile.phi);
    d2.iter()
        .zip(&profile.phi)
        .map(|(d, f)| (profile.params.omega * d + f.sinh()).abs())
        .fold(0.0, f64::max)
}

pub fn integral_dphi_squared(params: &WaveParams) -> f64 {
    closed_form::dphi_squared_integral(params.length, params.modulus())
}

pub fn energy_closed_form(params: &WaveParams) -> f64 {
    closed_form::energy(params.length, params.modulus())
}

pub fn dk_domega(params: &WaveParams) -> f64 {
    1.0 / closed_form::domega_dk(params.length, params.modulus())
}

/// Closed forms as plain functions of (L, k), defined whether or not a wave
/// exists there (omega may exceed 1).
pub mod closed_form {
    use crate::elliptic::{complete_integrals, EllipticModulus};

    pub fn omega(length: f64, k: EllipticModulus) -> f64 {
        let kk = complete_integrals(k).k;
        let kp = k.complementary();
        (length / (4.0 * kk * kp)).powi(2)
    }

    /// int_0^L (phi')^2 = 64 K (K - E) / L
    pub fn dphi_squared_integral(length: f64, k: EllipticModulus) -> f64 {
        let ci = complete_integrals(k);
        64.0 * ci.k * ci.k_minus_e / length
    }

    /// d/dk of `dphi_squared_integral` at fixed L.
    pub fn dphi_squared_integral_dk(length: f64, k: EllipticModulus) -> f64 {
        let ci = complete_integrals(k);
        let kv = k.value();
        let kp2 = (1.0 - kv) * (1.0 + kv);
        let dk = (ci.e - kp2 * ci.k) / (kv * kp2);
        let de = -ci.k_minus_e / kv;
        64.0 / length * (dk * ci.k_minus_e + ci.k * (dk - de))
    }

    /// (64/L) [K^2 - K E - L^2 k^2 / (32 (1-k^2))]
    pub fn energy(length: f64, k: EllipticModulus) -> f64 {
        let ci = complete_integrals(k);
        let kv = k.value();
        let kp2 = (1.0 - kv) * (1.0 + kv);
        64.0 / length * (ci.k * ci.k_minus_e - length * length * kv * kv / (32.0 * kp2))
    }

    /// d omega / dk at fixed L = L^2 (K - E) / (8 K^3 k (1-k^2)^2)
    pub fn domega_dk(length: f64, k: EllipticModulus) -> f64 {
        let ci = complete_integrals(k);
        let kv = k.value();
        let kp2 = (1.0 - kv) * (1.0 + kv);
        length * length * ci.k_minus_e / (8.0 * ci.k.powi(3) * kv * kp2 * kp2)
    }
}
