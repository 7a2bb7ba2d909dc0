use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("gradient is not defined at a singular point: {0}")]
    SingularPoint(String),

    #[error("recession limit did not converge: extrapolants {first} and {second} disagree")]
    NonConvergentRecession { first: f64, second: f64 },

    #[error("proximal step failed to converge after {iterations} iterations")]
    ProxFailure { iterations: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("solver unstable at iteration {iteration}: energy rose from {from:.6e} to {to:.6e}; try smaller steps")]
    Instability {
        iteration: usize,
        from: f64,
        to: f64,
    },

    #[error("Newton inversion failed ({0}); try a smaller eps")]
    NewtonFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(expected: impl std::fmt::Display, got: impl std::fmt::Display) -> Error {
    Error::Shape {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
