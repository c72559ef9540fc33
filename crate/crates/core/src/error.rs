use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the pipeline. `is_domain` separates bad
/// input from numerical trouble (the CLI maps them to exit codes 2 and 3).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("ode integration failed: {0}")]
    Integration(String),
    #[error("periodicity violated: residual {residual:.3e} exceeds {bound:.3e}")]
    Periodicity { residual: f64, bound: f64 },
    #[error("bracketing failed: {0}")]
    Bracketing(String),
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("ambiguous zero classification: |lambda| = {value:.3e} lies in (tol, 10 tol], tol = {tol:.3e}")]
    Ambiguous { value: f64, tol: f64 },
    #[error("inconsistent index: {0}")]
    Inconsistent(String),
    #[error("overflow guard hit at t = {t}: max|u| = {max_u:.3e}")]
    BlowUp { t: f64, max_u: f64 },
}

impl Error {
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::DimensionMismatch { .. })
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::DimensionMismatch { .. } => "dimension",
            Error::Quadrature(_) => "quadrature",
            Error::Integration(_) => "integration",
            Error::Periodicity { .. } => "periodicity",
            Error::Bracketing(_) => "bracketing",
            Error::Eigensolver(_) => "eigensolver",
            Error::Ambiguous { .. } => "ambiguous",
            Error::Inconsistent(_) => "inconsistent",
            Error::BlowUp { .. } => "overflow",
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
