use crate::error::{ChannelError, Result};
use crate::kraus::KrausMap;
use crate::potential::{invariant_state, nonequilibrium_potential, NonequilibriumPotential};
use qtherm_core::DensityOperator;

/// `Ω = E^(N) ∘ … ∘ E^(1)` with each map's invariant state and potential.
#[derive(Debug, Clone)]
pub struct Concatenation {
    pub maps: Vec<KrausMap>,
    pub invariants: Vec<DensityOperator>,
    pub potentials: Vec<NonequilibriumPotential>,
}

impl Concatenation {
    /// From maps with known invariant states.
    pub fn with_invariants(maps: Vec<KrausMap>, invariants: Vec<DensityOperator>) -> Result<Self> {
        if maps.is_empty() {
            return Err(ChannelError::Empty);
        }
        if invariants.len() != maps.len() {
            return Err(ChannelError::LengthMismatch {
                expected: maps.len(),
                got: invariants.len(),
            });
        }
        let d = maps[0].dim();
        if let Some(m) = maps.iter().find(|m| m.dim() != d) {
            return Err(ChannelError::DimensionMismatch {
                expected: d,
                got: m.dim(),
            });
        }
        let potentials = invariants
            .iter()
            .map(nonequilibrium_potential)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            maps,
            invariants,
            potentials,
        })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    /// `ρ(t_l)` for `l = 0..=N`.
    pub fn states(&self, rho0: &DensityOperator) -> Vec<DensityOperator> {
        let mut out = Vec::with_capacity(self.len() + 1);
        out.push(rho0.clone());
        for m in &self.maps {
            let next = crate::kraus::apply(m, out.last().expect("non-empty"));
            out.push(next);
        }
        out
    }

    /// Composite map applied to a state.
    pub fn apply(&self, rho: &DensityOperator) -> DensityOperator {
        self.states(rho).pop().expect("non-empty")
    }
}

/// Concatenation with invariant states computed numerically.
pub fn concatenate(maps: Vec<KrausMap>) -> Result<Concatenation> {
    let invariants = maps.iter().map(invariant_state).collect::<Result<Vec<_>>>()?;
    Concatenation::with_invariants(maps, invariants)
}

fn check_len(conc: &Concatenation, states: &[DensityOperator]) -> Result<()> {
    if states.len() != conc.len() + 1 {
        return Err(ChannelError::LengthMismatch {
            expected: conc.len() + 1,
            got: states.len(),
        });
    }
    Ok(())
}

/// `Σ_l Tr[(ρ(t_l) - ρ(t_{l-1})) Φ_l]`.
pub fn potential_change_total(conc: &Concatenation, states: &[DensityOperator]) -> Result<f64> {
    check_len(conc, states)?;
    Ok(conc
        .potentials
        .iter()
        .enumerate()
        .map(|(l, p)| p.expect(states[l + 1].matrix()) - p.expect(states[l].matrix()))
        .sum())
}

/// Boundary and path parts `(ΔΦ_b, ΔΦ_p)` of the potential change.
pub fn potential_change_split(conc: &Concatenation, states: &[DensityOperator]) -> Result<(f64, f64)> {
    check_len(conc, states)?;
    let n = conc.len();
    let pots = &conc.potentials;
    let boundary = pots[n - 1].expect(states[n].matrix()) - pots[0].expect(states[0].matrix());
    let path = -(1..n)
        .map(|l| pots[l].expect(states[l].matrix()) - pots[l - 1].expect(states[l].matrix()))
        .sum::<f64>();
    Ok((boundary, path))
}
