use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("embedding onto a single site {0}: pair sites must differ")]
    SameSite(usize),
    #[error("matrix is singular to working precision (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no gauge branch reconstructs the boundary matrices (best residual {best:.3e})")]
    GaugeBranch { best: f64 },
    #[error("root set on a pole of the Bethe equations: {0}")]
    PoleSet(String),
    #[error("degenerate Bethe state: {0}")]
    DegenerateState(String),
    #[error("requires the homogeneous chain (all inhomogeneities zero)")]
    Inhomogeneous,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
