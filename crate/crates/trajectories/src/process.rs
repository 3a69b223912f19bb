use crate::error::{Result, TrajectoryError};
use qtherm_channels::{kraus_from_unitary, KrausMap};
use qtherm_core::{
    max_abs, time_ordered_unitary, tol, CMatrix, DensityOperator, ProjectiveBasis, Protocol, TimeReversal,
};

/// A measured subsystem: its initial state, the eigenbasis used for the
/// first measurement and the basis of the final measurement.
#[derive(Debug, Clone)]
pub struct Part {
    pub state: DensityOperator,
    pub basis: ProjectiveBasis,
    /// Eigenvalues of `state` in `basis` order.
    pub weights: Vec<f64>,
    pub final_basis: ProjectiveBasis,
}

impl Part {
    /// Measures in the eigenbasis of `state`; fails on degenerate spectra.
    pub fn new(state: DensityOperator, final_basis: ProjectiveBasis, name: &'static str) -> Result<Self> {
        let eig = state.eigen();
        if eig.degenerate {
            return Err(TrajectoryError::DegenerateSpectrum(name));
        }
        let basis = eig.basis();
        Self::with_basis(state, basis, final_basis, name)
    }

    /// Measures in a caller-supplied basis, which must diagonalize `state`.
    pub fn with_basis(
        state: DensityOperator,
        basis: ProjectiveBasis,
        final_basis: ProjectiveBasis,
        name: &'static str,
    ) -> Result<Self> {
        let d = state.dim();
        if basis.dim() != d || basis.len() != d || final_basis.dim() != d || final_basis.len() != d {
            return Err(TrajectoryError::DimensionMismatch {
                expected: d,
                got: basis.len().min(final_basis.len()),
            });
        }
        let residual = diagonal_residual(state.matrix(), &basis);
        if residual > tol::HERM {
            return Err(TrajectoryError::NotDiagonal { part: name, residual });
        }
        let weights = basis.vectors().iter().map(|v| state.weight(v).max(0.0)).collect();
        Ok(Self {
            state,
            basis,
            weights,
            final_basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }
}

/// Largest off-diagonal element of `m` in `basis`.
pub(crate) fn diagonal_residual(m: &CMatrix, basis: &ProjectiveBasis) -> f64 {
    let v = basis.as_matrix();
    let mut r = v.adjoint() * m * &v;
    for i in 0..r.nrows() {
        r[(i, i)] = 0.0.into();
    }
    max_abs(&r)
}

/// Initial state `ρ̃_SE` of the backward process, diagonal in the reversed
/// final bases.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BackwardInit {
    /// `Θ ρ*_SE Θ^dag`: inclusive entropy production.
    Correlated,
    /// `Θ (ρ*_S ⊗ ρ*_1 ⊗ … ⊗ ρ*_R) Θ^dag`: non-inclusive entropy production.
    #[default]
    Product,
    /// `Θ (ρ*_S ⊗ ρ_E) Θ^dag`: the environment restarts in its initial state,
    /// which must be diagonal in the final environment basis.
    Reset,
    /// `Θ (ρ̃_S ⊗ ρ̃_1 ⊗ … ⊗ ρ̃_R) Θ^dag` from weights in the final bases.
    Custom {
        system: Vec<f64>,
        environment: Vec<Vec<f64>>,
    },
}

/// Two-point measurement process on a system and one or more uncorrelated
/// environment ancillas.
#[derive(Debug, Clone)]
pub struct BipartiteProcess {
    pub system: Part,
    pub ancillas: Vec<Part>,
    pub protocol: Protocol,
    pub theta: TimeReversal,
    pub backward_init: BackwardInit,
    unitary: CMatrix,
    reversed_unitary: CMatrix,
}

impl BipartiteProcess {
    pub fn new(system: Part, environment: Part, protocol: Protocol) -> Result<Self> {
        Self::multipartite(system, vec![environment], protocol)
    }

    /// Environment `ρ_1 ⊗ … ⊗ ρ_R`, each ancilla measured locally; the
    /// joint environment index takes the first ancilla as most significant.
    pub fn multipartite(system: Part, ancillas: Vec<Part>, protocol: Protocol) -> Result<Self> {
        if ancillas.is_empty() {
            return Err(TrajectoryError::DimensionMismatch { expected: 1, got: 0 });
        }
        let total = system.dim() * ancillas.iter().map(Part::dim).product::<usize>();
        if protocol.dim() != total {
            return Err(TrajectoryError::DimensionMismatch {
                expected: total,
                got: protocol.dim(),
            });
        }
        let theta = TimeReversal::default();
        let unitary = time_ordered_unitary(&protocol)?;
        let reversed_unitary = time_ordered_unitary(&protocol.reversed(theta))?;
        Ok(Self {
            system,
            ancillas,
            protocol,
            theta,
            backward_init: BackwardInit::default(),
            unitary,
            reversed_unitary,
        })
    }

    pub fn with_backward_init(mut self, init: BackwardInit) -> Self {
        self.backward_init = init;
        self
    }

    pub fn with_time_reversal(mut self, theta: TimeReversal) -> Result<Self> {
        self.theta = theta;
        self.reversed_unitary = time_ordered_unitary(&self.protocol.reversed(theta))?;
        Ok(self)
    }

    /// `U_Λ`.
    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// `U_Λ̃` from `Θ H(τ - t) Θ^dag`.
    pub fn reversed_unitary(&self) -> &CMatrix {
        &self.reversed_unitary
    }

    pub fn dim_s(&self) -> usize {
        self.system.dim()
    }

    /// Joint environment dimension.
    pub fn dim_e(&self) -> usize {
        self.ancillas.iter().map(Part::dim).product()
    }

    pub fn dim(&self) -> usize {
        self.dim_s() * self.dim_e()
    }

    /// `ρ_E = ρ_1 ⊗ … ⊗ ρ_R`.
    pub fn environment_state(&self) -> DensityOperator {
        let mut it = self.ancillas.iter();
        let first = it.next().expect("at least one ancilla").state.clone();
        let joint = it.fold(first, |acc, a| DensityOperator::product(&acc, &a.state));
        let d = joint.dim();
        joint.with_dims(vec![d]).expect("dimension is the product")
    }

    /// Joint initial environment basis.
    pub fn environment_basis(&self) -> ProjectiveBasis {
        joint_basis(self.ancillas.iter().map(|a| &a.basis))
    }

    /// Joint final environment basis.
    pub fn environment_final_basis(&self) -> ProjectiveBasis {
        joint_basis(self.ancillas.iter().map(|a| &a.final_basis))
    }

    /// `q_ν` for joint indices.
    pub fn environment_weights(&self) -> Vec<f64> {
        joint_weights(self.ancillas.iter().map(|a| a.weights.as_slice()))
    }

    /// Per-ancilla indices of a joint environment index.
    pub fn ancilla_indices(&self, mut joint: usize) -> Vec<usize> {
        let mut out = vec![0; self.ancillas.len()];
        for (r, a) in self.ancillas.iter().enumerate().rev() {
            out[r] = joint % a.dim();
            joint /= a.dim();
        }
        out
    }

    /// Reduced map with operators `M_{μν}` labeled by the environment
    /// transition, ordered `ν` then `μ`.
    pub fn kraus_map(&self) -> Result<KrausMap> {
        Ok(kraus_from_unitary(
            &self.unitary,
            &self.environment_weights(),
            &self.environment_basis(),
            &self.environment_final_basis(),
        )?)
    }
}

pub(crate) fn joint_basis<'a>(mut parts: impl Iterator<Item = &'a ProjectiveBasis>) -> ProjectiveBasis {
    let first = parts.next().expect("at least one basis").clone();
    parts.fold(first, |acc, b| acc.tensor(b))
}

pub(crate) fn joint_weights<'a>(parts: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    parts.fold(vec![1.0], |acc, w| {
        acc.iter().flat_map(|a| w.iter().map(move |b| a * b)).collect()
    })
}
