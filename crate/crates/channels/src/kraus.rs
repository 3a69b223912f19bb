use crate::error::{ChannelError, Result};
use crate::TOL_CPTP;
use qtherm_core::{max_abs, tol, unitarity_residual, CMatrix, DensityOperator, ProjectiveBasis, C64};
use serde::{Deserialize, Serialize};

/// What a Kraus operator records about the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KrausLabel {
    /// Environment measured in `ν` before and `μ` after the interaction.
    Transition { nu: usize, mu: usize },
    /// Jump channel `k` of a Lindblad unraveling.
    Jump { k: usize },
    /// Evolution without a detected jump.
    NoJump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperator {
    pub matrix: CMatrix,
    pub label: KrausLabel,
    /// Environment entropy change `σ^E` (nats).
    pub sigma_e: Option<f64>,
    /// Nonequilibrium potential change `Δφ` (nats).
    pub dphi: Option<f64>,
}

impl KrausOperator {
    pub fn new(matrix: CMatrix, label: KrausLabel) -> Self {
        Self {
            matrix,
            label,
            sigma_e: None,
            dphi: None,
        }
    }

    pub fn with_sigma_e(mut self, s: f64) -> Self {
        self.sigma_e = Some(s);
        self
    }

    pub fn with_dphi(mut self, d: f64) -> Self {
        self.dphi = Some(d);
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Ordered Kraus representation `E(ρ) = Σ_k M_k ρ M_k^dag`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    ops: Vec<KrausOperator>,
    dim: usize,
}

impl KrausMap {
    /// Validates dimensions and completeness within `TOL_CPTP`.
    pub fn new(ops: Vec<KrausOperator>) -> Result<Self> {
        let map = Self::new_unchecked(ops)?;
        let r = map.completeness_residual();
        if r > TOL_CPTP {
            return Err(ChannelError::NotComplete(r));
        }
        Ok(map)
    }

    /// Validates dimensions only; for trace-decreasing pieces.
    pub fn new_unchecked(ops: Vec<KrausOperator>) -> Result<Self> {
        let dim = ops.first().ok_or(ChannelError::Empty)?.dim();
        for (index, op) in ops.iter().enumerate() {
            if !op.matrix.is_square() || op.dim() != dim {
                return Err(ChannelError::OperatorDimension {
                    index,
                    expected: dim,
                    got: op.matrix.nrows(),
                });
            }
        }
        Ok(Self { ops, dim })
    }

    /// Operators labeled `Jump { k }` in order.
    pub fn from_matrices(ms: Vec<CMatrix>) -> Result<Self> {
        Self::new(
            ms.into_iter()
                .enumerate()
                .map(|(k, m)| KrausOperator::new(m, KrausLabel::Jump { k }))
                .collect(),
        )
    }

    pub fn ops(&self) -> &[KrausOperator] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> &KrausOperator {
        &self.ops[i]
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn into_ops(self) -> Vec<KrausOperator> {
        self.ops
    }

    /// `max |Σ M^dag M - I|`.
    pub fn completeness_residual(&self) -> f64 {
        let mut s = CMatrix::zeros(self.dim, self.dim);
        for op in &self.ops {
            s += op.matrix.adjoint() * &op.matrix;
        }
        max_abs(&(s - CMatrix::identity(self.dim, self.dim)))
    }

    /// `Σ M ρ M^dag` on a raw matrix.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for op in &self.ops {
            out += &op.matrix * rho * op.matrix.adjoint();
        }
        out
    }

    /// Assigns `σ^E` per operator in order.
    pub fn with_sigma_e(mut self, sigma: &[f64]) -> Result<Self> {
        if sigma.len() != self.ops.len() {
            return Err(ChannelError::LengthMismatch {
                expected: self.ops.len(),
                got: sigma.len(),
            });
        }
        for (op, s) in self.ops.iter_mut().zip(sigma) {
            op.sigma_e = Some(*s);
        }
        Ok(self)
    }

    /// Assigns `Δφ` per operator in order.
    pub fn with_dphi(mut self, dphi: &[f64]) -> Result<Self> {
        if dphi.len() != self.ops.len() {
            return Err(ChannelError::LengthMismatch {
                expected: self.ops.len(),
                got: dphi.len(),
            });
        }
        for (op, d) in self.ops.iter_mut().zip(dphi) {
            op.dphi = Some(*d);
        }
        Ok(self)
    }

    /// `σ^E_{μν} = ln q_ν - ln q̃_μ` for transition-labeled operators, with
    /// `q` the initial environment weights and `q̃` the backward ones.
    pub fn with_transition_entropies(mut self, q: &[f64], q_tilde: &[f64]) -> Result<Self> {
        for (i, op) in self.ops.iter_mut().enumerate() {
            let KrausLabel::Transition { nu, mu } = op.label else {
                return Err(ChannelError::NotTransition(i));
            };
            if q[nu] <= 0.0 {
                return Err(ChannelError::ZeroEnvWeight(nu));
            }
            if q_tilde[mu] <= 0.0 {
                return Err(ChannelError::ZeroEnvWeight(mu));
            }
            op.sigma_e = Some(q[nu].ln() - q_tilde[mu].ln());
        }
        Ok(self)
    }
}

/// `E(ρ)`.
pub fn apply(map: &KrausMap, rho: &DensityOperator) -> DensityOperator {
    assert_eq!(map.dim(), rho.dim(), "map and state dimensions differ");
    DensityOperator::from_trusted(map.apply_matrix(rho.matrix()), rho.dims().to_vec())
}

/// Unnormalized `M ρ M^dag` and its trace.
pub fn apply_operation(op: &KrausOperator, rho: &DensityOperator) -> (CMatrix, f64) {
    let out = &op.matrix * rho.matrix() * op.matrix.adjoint();
    let p = out.trace().re;
    (out, p)
}

/// Superoperator `Σ M ⊗ conj(M)` acting on row-major `vec(ρ)`.
pub fn transfer_matrix(map: &KrausMap) -> CMatrix {
    let d = map.dim();
    let mut t = CMatrix::zeros(d * d, d * d);
    for op in map.ops() {
        t += op.matrix.kronecker(&op.matrix.map(|z| z.conj()));
    }
    t
}

/// `M_{μν} = √q_ν <φ*_μ| U |φ_ν>`, ordered by `ν` then `μ`.
pub fn kraus_from_unitary(
    u: &CMatrix,
    env_weights: &[f64],
    env_basis: &ProjectiveBasis,
    env_final: &ProjectiveBasis,
) -> Result<KrausMap> {
    let de = env_basis.dim();
    if env_final.dim() != de || env_weights.len() != env_basis.len() || de == 0 {
        return Err(ChannelError::DimensionMismatch {
            expected: de,
            got: env_final.dim(),
        });
    }
    if u.nrows() % de != 0 || !u.is_square() {
        return Err(ChannelError::DimensionMismatch {
            expected: de,
            got: u.nrows(),
        });
    }
    let r = unitarity_residual(u);
    if r > tol::UNIT {
        return Err(qtherm_core::CoreError::NotUnitary(r).into());
    }
    let ds = u.nrows() / de;
    let mut ops = Vec::with_capacity(env_basis.len() * env_final.len());
    for (nu, phi) in env_basis.vectors().iter().enumerate() {
        let w = C64::new(env_weights[nu].max(0.0).sqrt(), 0.0);
        for (mu, chi) in env_final.vectors().iter().enumerate() {
            let m = CMatrix::from_fn(ds, ds, |i, j| {
                let mut s = C64::new(0.0, 0.0);
                for b in 0..de {
                    let cb = chi[b].conj();
                    if cb == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for cc in 0..de {
                        s += cb * u[(i * de + b, j * de + cc)] * phi[cc];
                    }
                }
                s * w
            });
            ops.push(KrausOperator::new(m, KrausLabel::Transition { nu, mu }));
        }
    }
    KrausMap::new(ops)
}
