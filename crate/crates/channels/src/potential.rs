use crate::error::{ChannelError, Result};
use crate::kraus::{transfer_matrix, KrausLabel, KrausMap};
use crate::{PD_FLOOR, TOL_COEF, TOL_FIX, TOL_LADDER};
use qtherm_core::{eig_hermitian, max_abs, tol, CMatrix, DensityOperator, ProjectiveBasis, C64};
use std::fmt;

/// Largest dimension solved through the dense transfer matrix.
const DENSE_LIMIT: usize = 16;
const POWER_MAX_ITER: usize = 1_000_000;

/// Fixed point `E(π) = π`, Hermitized, unit trace and positive definite.
///
/// When the fixed space is degenerate the maximally mixed state is returned
/// if it is fixed; otherwise the map has no unique invariant state.
pub fn invariant_state(map: &KrausMap) -> Result<DensityOperator> {
    let d = map.dim();
    let pi = if d <= DENSE_LIMIT {
        dense_fixed_point(map)?
    } else {
        power_fixed_point(map)?
    };
    let m = pi.matrix();
    let r = max_abs(&(map.apply_matrix(m) - m));
    if r > TOL_FIX {
        return Err(ChannelError::NotInvariant(r));
    }
    let min = pi.eigen().values[0];
    if min <= PD_FLOOR {
        return Err(ChannelError::NotPositiveDefinite(min));
    }
    Ok(pi)
}

fn normalize_fixed(m: CMatrix, d: usize) -> Result<DensityOperator> {
    let tr = m.trace();
    if tr.norm() < 1e-300 {
        return Err(ChannelError::NoFixedPoint(f64::NAN));
    }
    let m = m / tr;
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    Ok(DensityOperator::from_trusted(m, vec![d]))
}

fn dense_fixed_point(map: &KrausMap) -> Result<DensityOperator> {
    let d = map.dim();
    let n = d * d;
    let a = transfer_matrix(map) - CMatrix::identity(n, n);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = svd.singular_values[order[0]];
    if smallest > TOL_FIX {
        return Err(ChannelError::NoFixedPoint(smallest));
    }
    let null = order
        .iter()
        .take_while(|&&i| svd.singular_values[i] <= TOL_FIX)
        .count();
    if null > 1 {
        let mixed = CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
        let r = max_abs(&(map.apply_matrix(&mixed) - &mixed));
        if r <= TOL_FIX {
            return Ok(DensityOperator::maximally_mixed(d));
        }
        return Err(ChannelError::NonUniqueFixedPoint(null));
    }
    let row = v_t.row(order[0]);
    let m = CMatrix::from_fn(d, d, |i, j| row[i * d + j].conj());
    normalize_fixed(m, d)
}

fn power_fixed_point(map: &KrausMap) -> Result<DensityOperator> {
    let d = map.dim();
    let mut rho = CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
    let mut last = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let next = map.apply_matrix(&rho);
        last = max_abs(&(&next - &rho));
        rho = next;
        if last < 1e-14 {
            return normalize_fixed(rho, d);
        }
    }
    Err(ChannelError::NoFixedPoint(last))
}

/// `Φ = -ln π` through its spectral decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct NonequilibriumPotential {
    /// `φ_i = -ln π_i`, ascending in `φ`.
    pub phi: Vec<f64>,
    pub basis: ProjectiveBasis,
}

impl NonequilibriumPotential {
    /// From analytic data; `Σ exp(-φ_i)` must be 1 within the trace tolerance.
    pub fn from_spectrum(phi: Vec<f64>, basis: ProjectiveBasis) -> Result<Self> {
        if phi.len() != basis.len() {
            return Err(ChannelError::LengthMismatch {
                expected: basis.len(),
                got: phi.len(),
            });
        }
        let z: f64 = phi.iter().map(|p| (-p).exp()).sum();
        if (z - 1.0).abs() > tol::TRACE {
            return Err(ChannelError::PotentialNormalization(z));
        }
        Ok(Self { phi, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `Φ` as a matrix.
    pub fn matrix(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (p, v) in self.phi.iter().zip(self.basis.vectors()) {
            m += v * v.adjoint() * C64::new(*p, 0.0);
        }
        m
    }

    /// `π = exp(-Φ)`.
    pub fn state(&self) -> DensityOperator {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (p, v) in self.phi.iter().zip(self.basis.vectors()) {
            m += v * v.adjoint() * C64::new((-p).exp(), 0.0);
        }
        DensityOperator::from_trusted(m, vec![d])
    }

    /// `Tr[ρ Φ]`.
    pub fn expect(&self, rho: &CMatrix) -> f64 {
        self.phi
            .iter()
            .zip(self.basis.vectors())
            .map(|(p, v)| p * (v.adjoint() * rho * v)[(0, 0)].re)
            .sum()
    }
}

/// Potential of a positive definite invariant state.
pub fn nonequilibrium_potential(pi: &DensityOperator) -> Result<NonequilibriumPotential> {
    let eig = eig_hermitian(pi.matrix())?;
    let min = eig.values[0];
    if min <= PD_FLOOR {
        return Err(ChannelError::NotPositiveDefinite(min));
    }
    // ascending φ is descending π
    let d = eig.dim();
    let idx: Vec<usize> = (0..d).rev().collect();
    let phi = idx.iter().map(|&i| -eig.values[i].ln()).collect();
    let vectors = idx.iter().map(|&i| eig.vector(i)).collect();
    Ok(NonequilibriumPotential {
        phi,
        basis: ProjectiveBasis::new(vectors)?,
    })
}

/// First pair of matrix elements of one operator with different potential
/// gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderWitness {
    pub operator: usize,
    pub label: KrausLabel,
    /// `(target, source)` indices in the potential eigenbasis.
    pub first: (usize, usize),
    pub first_gap: f64,
    pub second: (usize, usize),
    pub second_gap: f64,
    /// Modulus of the element at `second`.
    pub magnitude: f64,
}

impl fmt::Display for LadderWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "operator {} ({:?}) connects {:?} with gap {:.6e} and {:?} with gap {:.6e} (|m| = {:.3e})",
            self.operator,
            self.label,
            self.first,
            self.first_gap,
            self.second,
            self.second_gap,
            self.magnitude
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub satisfied: bool,
    /// Common gap `φ_target - φ_source` per operator, when it exists.
    pub dphi: Vec<Option<f64>>,
    pub witness: Option<LadderWitness>,
}

impl ConditionReport {
    /// The map with `Δφ` attached; fails if the condition is violated.
    pub fn annotate(&self, map: &KrausMap) -> Result<KrausMap> {
        if let Some(w) = &self.witness {
            return Err(ChannelError::LadderViolation(w.clone()));
        }
        let dphi: Vec<f64> = self.dphi.iter().map(|d| d.unwrap_or(0.0)).collect();
        map.clone().with_dphi(&dphi)
    }
}

/// Checks that every operator only connects potential eigenstates with a
/// single gap `Δφ = φ_j - φ_i` for elements `<π_j|M|π_i>`.
pub fn check_ladder_condition(map: &KrausMap, phi: &NonequilibriumPotential) -> ConditionReport {
    let v = phi.basis.as_matrix();
    let vd = v.adjoint();
    let mut dphi = Vec::with_capacity(map.len());
    let mut witness = None;
    for (k, op) in map.ops().iter().enumerate() {
        let m = &vd * &op.matrix * &v;
        let mut anchor: Option<((usize, usize), f64, f64)> = None;
        let mut bad = None;
        for j in 0..m.nrows() {
            for i in 0..m.ncols() {
                let mag = m[(j, i)].norm();
                if mag <= TOL_COEF {
                    continue;
                }
                let gap = phi.phi[j] - phi.phi[i];
                match anchor {
                    None => anchor = Some(((j, i), gap, mag)),
                    Some((pos, g0, _)) => {
                        if (gap - g0).abs() > TOL_LADDER && bad.is_none() {
                            bad = Some(LadderWitness {
                                operator: k,
                                label: op.label,
                                first: pos,
                                first_gap: g0,
                                second: (j, i),
                                second_gap: gap,
                                magnitude: mag,
                            });
                        }
                    }
                }
            }
        }
        match bad {
            Some(w) => {
                dphi.push(None);
                if witness.is_none() {
                    witness = Some(w);
                }
            }
            None => dphi.push(Some(anchor.map(|a| a.1).unwrap_or(0.0))),
        }
    }
    ConditionReport {
        satisfied: witness.is_none(),
        dphi,
        witness,
    }
}
