//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the correlator engine, pulse compiler, and simulator.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix contains non-finite entries")]
    NonFiniteEntries,

    #[error("not a valid density operator: {0}")]
    InvalidDensityOperator(String),

    #[error("density operator is not normalized (trace {0:.6})")]
    NotNormalized(f64),

    #[error("unknown measurement outcome {0}; expected +1 or -1")]
    UnknownOutcome(i8),

    #[error("correlator has non-real value (imaginary residue {0:.3e})")]
    ImaginaryResidue(f64),

    #[error("2x2 block is not a rotation R(theta, phi) (residual {0:.3e})")]
    NotRepresentable(f64),

    #[error("cannot legalize factor on pair ({pair_lo},{pair_hi}): {reason}")]
    LegalizationFailure {
        pair_lo: usize,
        pair_hi: usize,
        reason: String,
    },

    #[error("compiled sequence does not reconstruct its target (residual {0:.3e})")]
    ReconstructionFailure(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need at least 2 shots to estimate, got {0}")]
    TooFewShots(u64),

    #[error("standard error must be positive, got {0}")]
    NonPositiveStderr(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
