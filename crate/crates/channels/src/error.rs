use crate::potential::LadderWitness;
use qtherm_core::CoreError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("map has no Kraus operators")]
    Empty,

    #[error("operator {index} has dimension {got}, map dimension is {expected}")]
    OperatorDimension {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("Kraus operators are not complete (residual {0:e})")]
    NotComplete(f64),

    #[error("unitary acts on dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator {0} has no environment entropy assigned")]
    MissingSigmaE(usize),

    #[error("operator {0} has no potential change assigned")]
    MissingDphi(usize),

    #[error("environment entropies inconsistent with trace preservation of the backward map (residual {0:e})")]
    InconsistentEntropies(f64),

    #[error("environment weight q[{0}] is zero; its entropy change is undefined")]
    ZeroEnvWeight(usize),

    #[error("operator {0} does not carry an environment transition label")]
    NotTransition(usize),

    #[error("no fixed point within tolerance (smallest residual {0:e})")]
    NoFixedPoint(f64),

    #[error("fixed space has dimension {0} and the maximally mixed state is not fixed")]
    NonUniqueFixedPoint(usize),

    #[error("state is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("state is not invariant under the map (residual {0:e})")]
    NotInvariant(f64),

    #[error("ladder condition violated: {0}")]
    LadderViolation(LadderWitness),

    #[error("backward map does not leave the reversed invariant state fixed (residual {0:e})")]
    BackwardNotInvariant(f64),

    #[error("potential spectrum does not normalize (sum exp(-phi) = {0})")]
    PotentialNormalization(f64),

    #[error("expected {expected} states, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid map description: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, ChannelError>;
