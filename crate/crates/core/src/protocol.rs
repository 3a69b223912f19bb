//! Driving protocols, time-ordered evolution and time reversal.

use crate::error::{CoreError, Result};
use crate::linalg::{eig_hermitian, unitarity_residual};
use crate::{tol, CMatrix, CVector, C64};
use std::fmt;
use std::sync::Arc;

/// Anti-unitary time reversal acting in a fixed reference basis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TimeReversal {
    /// Entrywise complex conjugation in the computational basis.
    #[default]
    ComplexConjugation,
}

impl TimeReversal {
    /// `Θ m Θ^dag`.
    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        match self {
            TimeReversal::ComplexConjugation => m.map(|z| z.conj()),
        }
    }

    /// `Θ |v>`.
    pub fn apply_vector(&self, v: &CVector) -> CVector {
        match self {
            TimeReversal::ComplexConjugation => v.map(|z| z.conj()),
        }
    }
}

/// `Θ m Θ^dag`.
pub fn time_reverse(theta: TimeReversal, m: &CMatrix) -> CMatrix {
    theta.apply(m)
}

type HamiltonianFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

#[derive(Clone)]
enum Evolution {
    Hamiltonian(HamiltonianFn),
    Unitary(CMatrix),
}

/// Protocol `H(λ_t)` on `[0, τ]`, or an explicitly supplied gate.
#[derive(Clone)]
pub struct Protocol {
    tau: f64,
    n_slices: usize,
    hbar: f64,
    dim: usize,
    evolution: Evolution,
}

impl fmt::Debug for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.evolution {
            Evolution::Hamiltonian(_) => "hamiltonian",
            Evolution::Unitary(_) => "unitary",
        };
        f.debug_struct("Protocol")
            .field("kind", &kind)
            .field("tau", &self.tau)
            .field("n_slices", &self.n_slices)
            .field("dim", &self.dim)
            .finish()
    }
}

/// Default number of midpoint slices for driven protocols.
pub const DEFAULT_SLICES: usize = 256;

impl Protocol {
    /// Time-dependent Hamiltonian sampled at slice midpoints.
    pub fn driven<F>(dim: usize, tau: f64, n_slices: usize, h: F) -> Result<Self>
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        if n_slices == 0 {
            return Err(CoreError::NoSlices);
        }
        Ok(Self {
            tau,
            n_slices,
            hbar: 1.0,
            dim,
            evolution: Evolution::Hamiltonian(Arc::new(h)),
        })
    }

    /// Time-independent Hamiltonian; a single slice is exact.
    pub fn constant(h: CMatrix, tau: f64) -> Result<Self> {
        let dim = h.nrows();
        Self::driven(dim, tau, 1, move |_| h.clone())
    }

    /// A gate supplied directly as a unitary.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        let r = unitarity_residual(&u);
        if r > tol::UNIT {
            return Err(CoreError::NotUnitary(r));
        }
        Ok(Self {
            tau: 1.0,
            n_slices: 1,
            hbar: 1.0,
            dim: u.nrows(),
            evolution: Evolution::Unitary(u),
        })
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_slices(mut self, n_slices: usize) -> Result<Self> {
        if n_slices == 0 {
            return Err(CoreError::NoSlices);
        }
        self.n_slices = n_slices;
        Ok(self)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `H(t)`, or `None` for a gate protocol.
    pub fn hamiltonian(&self, t: f64) -> Option<CMatrix> {
        match &self.evolution {
            Evolution::Hamiltonian(h) => Some(h(t)),
            Evolution::Unitary(_) => None,
        }
    }

    /// Backward protocol `Θ H(τ - t) Θ^dag`; for a gate, `Θ U^dag Θ^dag`.
    pub fn reversed(&self, theta: TimeReversal) -> Self {
        let evolution = match &self.evolution {
            Evolution::Hamiltonian(h) => {
                let h = h.clone();
                let tau = self.tau;
                Evolution::Hamiltonian(Arc::new(move |t| theta.apply(&h(tau - t))))
            }
            Evolution::Unitary(u) => Evolution::Unitary(theta.apply(&u.adjoint())),
        };
        Self {
            evolution,
            ..self.clone()
        }
    }
}

/// Midpoint product `Π_k exp(-i H(t_k + Δt/2) Δt / ħ)`, later slices on the
/// left.
pub fn time_ordered_unitary(p: &Protocol) -> Result<CMatrix> {
    let u = match &p.evolution {
        Evolution::Unitary(u) => u.clone(),
        Evolution::Hamiltonian(h) => {
            let dt = p.tau / p.n_slices as f64;
            let mut u = CMatrix::identity(p.dim, p.dim);
            for k in 0..p.n_slices {
                let hk = h((k as f64 + 0.5) * dt);
                if hk.nrows() != p.dim || !hk.is_square() {
                    return Err(CoreError::DimensionMismatch {
                        expected: p.dim,
                        got: hk.nrows(),
                    });
                }
                let step = dt / p.hbar;
                u = eig_hermitian(&hk)?.map(|l| C64::from_polar(1.0, -l * step)) * u;
            }
            u
        }
    };
    let r = unitarity_residual(&u);
    if r > tol::UNIT {
        return Err(CoreError::NotUnitary(r));
    }
    Ok(u)
}
