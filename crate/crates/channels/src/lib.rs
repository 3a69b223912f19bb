//! CPTP maps with labeled Kraus operators.
//!
//! Each operator carries the environment transition it represents and,
//! once assigned, its environment entropy change `σ^E` and nonequilibrium
//! potential change `Δφ`. From a forward map and its invariant state this
//! crate builds the backward, dual and dual-reverse maps.

#![forbid(unsafe_code)]

mod concat;
mod error;
mod kraus;
mod potential;
mod serial;
mod transforms;

pub use concat::{concatenate, potential_change_split, potential_change_total, Concatenation};
pub use error::{ChannelError, Result};
pub use kraus::{
    apply, apply_operation, kraus_from_unitary, transfer_matrix, KrausLabel, KrausMap,
    KrausOperator,
};
pub use potential::{
    check_ladder_condition, invariant_state, nonequilibrium_potential, ConditionReport,
    LadderWitness, NonequilibriumPotential,
};
pub use transforms::{backward_map, dual_map, dual_reverse_map, invariance_residual};

/// Completeness residual `max |Σ M^dag M - I|` accepted for a CPTP map.
pub const TOL_CPTP: f64 = 1e-9;
/// Fixed-point residual for invariant states.
pub const TOL_FIX: f64 = 1e-9;
/// Spread of potential gaps within one operator.
pub const TOL_LADDER: f64 = 1e-9;
/// Matrix elements below this modulus are ignored by the ladder check.
pub const TOL_COEF: f64 = 1e-12;
/// Smallest eigenvalue accepted for an invariant state used as a potential.
pub const PD_FLOOR: f64 = 1e-12;
