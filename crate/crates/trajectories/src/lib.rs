//! Trajectory distributions and fluctuation theorems for two-point
//! measurement processes and concatenations of maps.

pub mod bipartite;
pub mod concat;
pub mod error;
pub mod ft;
pub mod perturb;
pub mod process;
pub mod record;
pub mod sample;
pub mod split;

pub use bipartite::{
    average_entropies, backward_distribution, bipartite_split, entropy_ledger, forward_distribution,
    reduced_invariant_state, split_entropy, AverageEntropies, BackwardWeights, Enumeration,
};
pub use concat::{concatenation_distribution, sample_concatenation, ConcatenationProcess};
pub use error::{Result, TrajectoryError};
pub use ft::{detailed_report, verify_detailed_ft, verify_integral_ft, DetailedFtReport, IntegralFt, Overrun};
pub use perturb::perturbative_relative_entropy_check;
pub use process::{BackwardInit, BipartiteProcess, Part};
pub use record::{EntropyLedger, Step, TrajectoryRecord, Which};
pub use sample::{sample_trajectories, trajectory_rng};
pub use split::MapSplit;

/// Largest number of outcome tuples enumerated exactly.
pub const ENUMERATION_CAP: usize = 65536;
/// Trajectories with smaller forward probability are dropped.
pub const PROB_CUTOFF: f64 = 1e-300;
/// Detailed-theorem residual under enumeration.
pub const TOL_FT: f64 = 1e-10;
