use thiserror::Error;

/// Errors produced anywhere in the compile pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary: max |U^dag U - I| = {deviation:.3e} exceeds tolerance {tolerance:.1e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("state is not normalized: |norm^2 - 1| = {deviation:.3e} exceeds tolerance {tolerance:.1e}")]
    NotNormalized { deviation: f64, tolerance: f64 },

    #[error("KAK decomposition failed (residual {residual:.3e}) for input {input}")]
    DecompositionFailure { residual: f64, input: String },

    #[error("Weyl coordinates ({kx}, {ky}, {kz}) are outside the canonical chamber")]
    NonCanonicalCoords { kx: f64, ky: f64, kz: f64 },

    #[error("single-qubit element solve did not converge (residual {residual:.3e})")]
    ConvergenceFailure { residual: f64 },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
