use qtherm_channels::ChannelError;
use qtherm_core::CoreError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Channel(#[from] ChannelError),

    #[error("{0} state has a degenerate spectrum; supply an explicit measurement basis")]
    DegenerateSpectrum(&'static str),

    #[error("{part} state is not diagonal in the supplied basis (residual {residual:e})")]
    NotDiagonal { part: &'static str, residual: f64 },

    #[error("process acts on dimension {got}, parts give {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{size} outcome tuples exceed the enumeration cap {cap}; use sampling")]
    CapExceeded { size: usize, cap: usize },

    #[error("backward weights for {part} have length {got}, expected {expected}")]
    WeightLength {
        part: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("backward weights for {0} are not a probability distribution")]
    InvalidWeights(&'static str),

    #[error("adiabatic/non-adiabatic split unavailable: {0}")]
    SplitUnavailable(String),

    #[error("no records to average")]
    Empty,

    #[error("perturbation is not Hermitian and traceless (residual {0:e})")]
    InvalidPerturbation(f64),

    #[error("perturbed state at eps = {0:e} is not a density operator")]
    PerturbationNotPositive(f64),
}

pub type Result<T> = std::result::Result<T, TrajectoryError>;
