//! Markovian dynamics in Lindblad form.
//!
//! Fixed-step RK4 integration of the master equation, quantum-jump
//! unraveling with per-jump environment entropies, and the total, adiabatic
//! and non-adiabatic entropy-production rates.

#![forbid(unsafe_code)]

mod error;
mod integrate;
mod model;
mod operator;
mod rates;
mod unravel;

pub use error::{LindbladError, Result};
pub use integrate::{
    default_dt, dissipator_apply, integrate, liouvillian_apply, liouvillian_apply_matrix, richardson_residual, Rk4,
    TOL_ODE,
};
pub use model::{
    assign_environment_entropies, InvariantSupplier, JumpOperator, LindbladModel, SplitDiagnostics,
};
pub use rates::{entropy_rates, entropy_rates_with, environment_entropy_rate, spohn_relaxation, RatesSample};
pub use unravel::{
    ensemble_average, jump_counts, jump_probability_bound, trajectory_entropies, unravel, unraveling_ledgers,
    EnsembleAverage, JumpEvent, JumpTrajectory, PathPoint, UnravelConfig, Unraveling, COARSE_STEP,
};
