use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m - m^H| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not traceless (|tr| = {0:e})")]
    NotTraceless(f64),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("negative eigenvalue {0:e} below clamp threshold")]
    NegativeSpectrum(f64),

    #[error("function undefined on spectrum: {0}")]
    DomainError(String),

    #[error("state is not invertible (min eigenvalue {0:e})")]
    NotInvertible(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("bad dimension: {0}")]
    BadDim(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("finite-difference probe left the simplex interior (min p = {0:e})")]
    ProbeOutOfDomain(f64),

    #[error("channel dimension mismatch: channel input {channel}, state {state}")]
    ChannelDimMismatch { channel: usize, state: usize },

    #[error("bad grid: {0}")]
    BadGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
