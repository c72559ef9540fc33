//! Periodic traveling waves of the sinh-Gordon equation
//! `u_tt - u_xx - sinh u = 0` and their spectral stability.
//!
//! The waves are `phi(x) = 2 artanh(k sn(4K x / L; k))`. Pipeline: [`wave`]
//! builds them, [`operators`] counts negative eigenvalues of the linearised
//! Hessians, [`stability`] turns those counts into a verdict and checks it
//! against the quadratic pencil, [`evolution`] runs the PDE itself.

pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod fourier;
pub mod ode;
pub mod operators;
pub mod output;
pub mod period_map;
pub mod stability;
pub mod wave;

#[cfg(test)]
mod tests;

pub use elliptic::{complete_e, complete_k, jacobi_sn_cn_dn, EllipticModulus};
pub use error::{Error, Result};
pub use evolution::{FieldState, Integrator};
pub use fourier::FourierGrid;
pub use operators::SpectrumReport;
pub use period_map::PlanarLevel;
pub use stability::{StabilityReport, Verdict};
pub use wave::{make_params, sample_profile, Branch, WaveParams, WaveProfile};
