use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite integrand value {value} at node ({}, {})", node.re, node.im)]
    NonFinite { node: Complex64, value: f64 },

    #[error("gram matrix is not positive definite (smallest eigenvalue estimate {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("laplacian {value} at ({}, {}) lies outside [{lower}, {upper}]", point.re, point.im)]
    BoundsViolation {
        point: Complex64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("weight is not integrable: {0}")]
    NotIntegrable(String),

    #[error("polynomial is not harmonic: laplacian has coefficient {coefficient:e} on x^{x_power} y^{y_power}")]
    NotHarmonic {
        x_power: usize,
        y_power: usize,
        coefficient: f64,
    },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("sample function has zero norm")]
    ZeroNorm,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
