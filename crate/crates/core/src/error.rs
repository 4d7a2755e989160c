//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Subdomain partition violates its invariants (overlap, non-conforming
    /// interface, non-positive coefficient, ...).
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// Bad argument to an operation (out-of-range index, θ outside [0,1), ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Degenerate or inconsistent geometry (zero-area triangle, endpoint
    /// mismatch along an interface, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A mesh does not satisfy the structural assumptions of an operation.
    #[error("mesh inconsistency: {0}")]
    MeshInconsistency(String),

    /// An edge lies on a subdomain interface that is not registered in the
    /// partition adjacency.
    #[error("partition inconsistency: {0}")]
    PartitionInconsistency(String),

    /// Configuration file/schema error; `path` names the offending key.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Direct solver failure (singular or numerically rank-deficient system).
    #[error("solver error during {stage}: {message}")]
    Solver { stage: String, message: String },

    /// Internal invariant broken; indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line interface.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Solver { .. } => 3,
            _ => 1,
        }
    }
}
