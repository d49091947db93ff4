use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("decoherence parameter {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("affine map is not quasiextreme: {0}")]
    NotQuasiExtreme(String),
    #[error("invalid decomposition plan: {0}")]
    InvalidPlan(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("zero total intensity in the {0} basis")]
    ZeroIntensity(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
