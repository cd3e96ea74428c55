use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("transform is undefined on constants: L0 coefficient must be zero")]
    ConstantTerm,

    #[error("zero polynomial has no isolated roots")]
    ZeroPolynomial,

    #[error("root refinement did not converge near x = {near}")]
    RootRefinement { near: f64 },

    #[error("degree k = {k} is not supported (need k >= {min})")]
    InvalidDegree { k: usize, min: usize },

    #[error("derivative order s = {s} is out of range for k = {k}")]
    InvalidDerivativeOrder { k: usize, s: usize },

    #[error("odd k = {k} with s = 0 requires the mean-cancellation assumption")]
    MeanCancellationRequired { k: usize },

    #[error("transform power {m} exceeds the supported cap {cap}")]
    DegreeCap { m: usize, cap: usize },

    #[error("sigma = {sigma} outside the admissible interval (0, {upper})")]
    SigmaOutOfRange { sigma: f64, upper: f64 },

    #[error("k - s must be even, got k = {k}, s = {s}")]
    OddParity { k: usize, s: usize },

    #[error("dimension n = {0} is not supported (expected 1, 2 or 3)")]
    InvalidDimension(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("smoothness mu = {mu} must satisfy 0 <= mu <= k - 1 = {}", .k.saturating_sub(1))]
    InvalidSmoothness { k: usize, mu: usize },

    #[error("point {x} lies outside [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },

    #[error("derivative of order {s} at breakpoint {x} exceeds smoothness {mu}; a side is required")]
    AmbiguousSide { x: f64, s: usize, mu: usize },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("exact solution is required for this operation")]
    MissingExactSolution,

    #[error("invalid local region: {0}")]
    InvalidRegion(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh generation failed: {0}")]
    MeshGeneration(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
