use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("tabulated kernel queried at z = {z} outside its table [{lo}, {hi}]")]
    InterpolationRange { z: f64, lo: f64, hi: f64 },

    #[error("kernel cannot be normalized: integral is {integral}")]
    Normalization { integral: f64 },

    #[error("moment integral does not converge: {0}")]
    Divergence(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions: value {value}, error estimate {error}")]
    NonConvergence {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("ill-conditioned fit: {0}")]
    Conditioning(String),

    #[error("formula has a pole at n = {n}")]
    Pole { n: i32 },

    #[error("profile term with 1/r coefficient is non-zero at r = 0")]
    PoleAtOrigin,

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
