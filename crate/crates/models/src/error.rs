use qtherm_channels::ChannelError;
use qtherm_core::CoreError;
use qtherm_lindblad::LindbladError;
use qtherm_trajectories::TrajectoryError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Channel(#[from] ChannelError),

    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),

    #[error(transparent)]
    Lindblad(#[from] LindbladError),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("initial system state is degenerate; an explicit measurement basis is required")]
    DegenerateBasis,

    #[error("second gate needs energy-basis final measurements (correlation left {0:e})")]
    NotDecorrelated(f64),

    #[error("population {leakage:e} above level {level} exceeds tolerance; enlarge n_max")]
    Truncation { level: usize, leakage: f64 },

    #[error("population {0} is not positive")]
    ZeroPopulation(usize),

    #[error("closed form requires equal decay rates")]
    UnequalRates,

    #[error("closed-form transients need a state diagonal in the number basis (off-diagonal {0:e})")]
    BranchMismatch(f64),
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
