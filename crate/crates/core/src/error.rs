use thiserror::Error;

/// Errors raised while building discretizations, assembling or solving.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("point ({x}, {y}) lies outside the mesh domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("quadrature order {0} unsupported (expected 1..=10)")]
    QuadratureOrder(usize),

    #[error("unsupported finite element space: {0}")]
    UnsupportedSpace(String),

    #[error("incompatible spaces: {0}")]
    IncompatibleSpaces(String),

    #[error("local BDM dof matrix is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("matrix is singular to working precision: pivot {pivot:e} at elimination step {step}")]
    Singular { step: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
