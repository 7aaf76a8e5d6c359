use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter combination supplied by the caller or a config file.
    #[error("configuration error: {0}")]
    Config(String),

    /// Config text that failed to parse or validate, with the offending line.
    #[error("line {line}: {message}")]
    ConfigAt { line: usize, message: String },

    #[error("unsupported derivative order {0} (at most 6)")]
    UnsupportedOrder(usize),

    /// The plus-side jump matrix is (numerically) singular.
    #[error("ill-conditioned interface: condition estimate {condition:.3e} at t = {t:.6e} s")]
    IllConditioned { condition: f64, t: f64 },

    /// The boundary-derivative fit lost rank.
    #[error("rank-deficient interface fit: singular values span {smallest:.3e}..{largest:.3e}")]
    RankDeficient { smallest: f64, largest: f64 },

    /// A stencil read crossed the interface without an override.
    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("non-finite field value at node {node}, t = {t:.6e} s")]
    NonFinite { node: usize, t: f64 },

    #[error("singular compliance: interface parameter reached {value:.3e} at t = {t:.6e} s")]
    SingularCompliance { value: f64, t: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
