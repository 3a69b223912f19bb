use crate::config::ConfigErrors;
use qtherm_channels::ChannelError;
use qtherm_core::CoreError;
use qtherm_lindblad::LindbladError;
use qtherm_models::ModelError;
use qtherm_trajectories::TrajectoryError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigErrors),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{module}: {message}")]
    Numerical { module: &'static str, message: String },
}

impl CliError {
    pub fn numerical(module: &'static str, message: impl Into<String>) -> Self {
        CliError::Numerical {
            module,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for configuration and I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical { .. } => 2,
        }
    }
}

macro_rules! module_error {
    ($ty:ty, $module:literal) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::numerical($module, e.to_string())
            }
        }
    };
}

module_error!(CoreError, "core");
module_error!(ChannelError, "channels");
module_error!(TrajectoryError, "trajectories");
module_error!(LindbladError, "lindblad");

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let module = match &e {
            ModelError::Core(_) => "core",
            ModelError::Channel(_) => "channels",
            ModelError::Trajectory(_) => "trajectories",
            ModelError::Lindblad(_) => "lindblad",
            _ => "models",
        };
        CliError::numerical(module, e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
