use thiserror::Error;

use crate::indexing::MultiIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("partition dimensions must be positive, got {n1}x{n2}")]
    InvalidPartition { n1: usize, n2: usize },

    #[error("({owner}, {neighbor}) is not an interface of the partition")]
    NotAnInterface {
        owner: MultiIndex,
        neighbor: MultiIndex,
    },

    #[error("ordinal {ordinal} out of range 1..={max}")]
    OrdinalOutOfRange { ordinal: usize, max: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("scatterer is not strictly inside a single subdomain")]
    ScattererOnInterface,

    #[error("scatterer contains no cell centre at this resolution")]
    ScattererUnresolved,

    #[error("singular factorization in subdomain {subdomain} at pivot {pivot}")]
    SingularFactorization { subdomain: MultiIndex, pivot: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("face {0:?} is not an interface face")]
    NotInterfaceFace(crate::discretization::Face),

    #[error("size guard exceeded: {size} > {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("GMRES breakdown at iteration {iteration} (residual {residual:e})")]
    Breakdown { iteration: usize, residual: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid configuration for `{key}`: {message}")]
    Config { key: String, message: String },
}
