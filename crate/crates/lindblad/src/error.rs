use qtherm_channels::ChannelError;
use qtherm_core::CoreError;
use qtherm_trajectories::TrajectoryError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LindbladError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Channel(#[from] ChannelError),

    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),

    #[error("operator has dimension {got}, model has {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Hamiltonian is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("protocol supplies a gate, not a Hamiltonian")]
    NoHamiltonian,

    #[error("jump operator {0} has no environment entropy and no partner; supply sigma_e")]
    Unpaired(usize),

    #[error("jump operator {0} has no environment entropy assigned")]
    MissingSigmaE(usize),

    #[error("environment entropies violate the consistency condition (residual {0:e})")]
    Inconsistent(f64),

    #[error("step dt = {dt:e} gives jump probability bound {bound:e}; reduce the step")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("positivity lost at t = {t:e} (eigenvalue {min:e}); reduce the step")]
    Positivity { t: f64, min: f64 },

    #[error("trace drifted to {trace} at t = {t:e}")]
    TraceDrift { t: f64, trace: f64 },

    #[error("state norm vanished at t = {0:e}")]
    NotNormalizable(f64),

    #[error("time grid must be non-empty, start at or after 0 and be nondecreasing")]
    InvalidGrid,

    #[error("state has weight {0:e} outside the support of the invariant state")]
    SupportViolation(f64),

    #[error("no unique positive definite steady state: {0}")]
    NoSteadyState(String),

    #[error("no trajectories to average")]
    Empty,
}

pub type Result<T> = std::result::Result<T, LindbladError>;
