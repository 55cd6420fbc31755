use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: String },

    #[error("invalid interval [{t}, {end}]: end must exceed start and both must be finite")]
    Interval { t: f64, end: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("adaptive quadrature did not reach tolerance {tol:e} (last change {achieved:e} with {panels} panels)")]
    Quadrature {
        tol: f64,
        achieved: f64,
        panels: usize,
    },

    #[error("coefficient tensor with {entries} entries exceeds the cap of {cap} entries")]
    TooLarge { entries: usize, cap: usize },

    #[error("polynomial degree {degree} exceeds the configured cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("{0}")]
    Precondition(String),

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
