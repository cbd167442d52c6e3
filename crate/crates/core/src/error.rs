//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A sequence operation asked for more moments than are available.
    #[error("insufficient moments: need index {needed}, have {available}")]
    InsufficientMoments { needed: usize, available: usize },

    /// A weight-level operation asked for more weights than are available.
    #[error("insufficient weights: need {needed}, have {available}")]
    InsufficientWeights { needed: usize, available: usize },

    /// A sequence that must consist of positive terms contains a term <= 0.
    #[error("not a weighted-shift moment sequence: gamma_{index} <= 0")]
    NonPositiveMoment { index: usize },

    /// First moment of a `MomentSequence` must be 1.
    #[error("moment sequence must start with gamma_0 = 1")]
    NotNormalized,

    /// Weight must be strictly positive.
    #[error("weight alpha_{index}^2 <= 0")]
    NonPositiveWeight { index: usize },

    /// An atomic charge was built with a repeated location or zero density.
    #[error("invalid atomic charge: {0}")]
    InvalidCharge(String),

    /// Recursion coefficients/initial segment malformed.
    #[error("invalid recursion spec: {0}")]
    InvalidRecursion(String),

    /// Backward extension requires the trailing coefficient to be invertible.
    #[error("cannot extend backward: trailing recursion coefficient is zero")]
    NotInvertible,

    /// Operation precondition violated (named).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The input is outside the shape a theorem predicate expects.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Explicit search bound exceeded; the operation refuses rather than approximate.
    #[error("search space too large: {0}")]
    SearchSpaceTooLarge(String),

    /// The pattern solver met a system it cannot decide exactly.
    #[error("undecidable within solver bounds: {0}")]
    Undecidable(String),

    /// Division that would leave the exact scalar domain.
    #[error("inexact division: {0}")]
    InexactDivision(String),

    /// A proof-replay step failed; carries the step name and detail.
    #[error("propagation step `{step}` failed: {detail}")]
    PropagationStep { step: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
