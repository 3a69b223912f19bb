use crate::error::{Result, TrajectoryError};
use qtherm_channels::{backward_map, dual_map, dual_reverse_map, ChannelError, KrausMap};
use qtherm_core::{DensityOperator, TimeReversal};

/// Backward, dual and dual-reverse maps of one map with `σ^E` assigned,
/// plus `Δφ` per operator.
#[derive(Debug, Clone)]
pub struct MapSplit {
    pub forward: KrausMap,
    pub backward: KrausMap,
    pub dual: KrausMap,
    pub dual_reverse: KrausMap,
    pub dphi: Vec<f64>,
}

impl MapSplit {
    /// Fails with `SplitUnavailable` when the ladder condition or the
    /// backward invariance of `Θ π Θ^dag` does not hold.
    pub fn new(map: &KrausMap, pi: &DensityOperator, theta: TimeReversal) -> Result<Self> {
        let backward = backward_map(map, theta)?;
        let dual = dual_map(map, pi, theta).map_err(unavailable)?;
        let dual_reverse = dual_reverse_map(map, pi, theta).map_err(unavailable)?;
        let dphi: Vec<f64> = dual.ops().iter().map(|o| o.dphi.unwrap_or(0.0)).collect();
        Ok(Self {
            forward: map.clone().with_dphi(&dphi)?,
            backward,
            dual,
            dual_reverse,
            dphi,
        })
    }
}

fn unavailable(e: ChannelError) -> TrajectoryError {
    match e {
        ChannelError::LadderViolation(w) => TrajectoryError::SplitUnavailable(format!("ladder condition violated: {w}")),
        ChannelError::BackwardNotInvariant(r) => {
            TrajectoryError::SplitUnavailable(format!("backward map does not preserve the reversed invariant state ({r:e})"))
        }
        other => other.into(),
    }
}
