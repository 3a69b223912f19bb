//! Kronecker products, Hermitian eigendecomposition and spectral functions.

use crate::error::{CoreError, Result};
use crate::state::ProjectiveBasis;
use crate::{tol, CMatrix, CVector, C64};
use nalgebra::linalg::SymmetricEigen;
use std::cmp::Ordering;

/// Kronecker product `a ⊗ b`, `a` being the leading (system) factor.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `max |m - m^dag|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut r = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_residual(m) <= tol
}

/// `max |u^dag u - I|`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending. Each eigenvector is phase-fixed so that its
/// first non-negligible component is real and positive; eigenvectors inside
/// a degenerate run are ordered lexicographically (descending) by their
/// entries.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
    /// Some pair of adjacent eigenvalues differs by less than `tol::DEGEN`.
    pub degenerate: bool,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }

    pub fn basis(&self) -> ProjectiveBasis {
        ProjectiveBasis::from_orthonormal_columns(&self.vectors)
    }

    /// `V f(Λ) V^dag`.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fj = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| C64::new(l, 0.0))
    }
}

const PHASE_FLOOR: f64 = 1e-10;

fn fix_phase(v: &mut [C64]) {
    if let Some(z) = v.iter().find(|z| z.norm() > PHASE_FLOOR).copied() {
        let ph = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
}

fn lex_desc(a: &[C64], b: &[C64]) -> Ordering {
    // entries are compared on a grid of spacing PHASE_FLOOR so that the
    // order is total
    let key = |x: f64| (x / PHASE_FLOOR).round();
    for (x, y) in a.iter().zip(b) {
        for (p, q) in [(x.re, y.re), (x.im, y.im)] {
            let o = key(q).total_cmp(&key(p));
            if o != Ordering::Equal {
                return o;
            }
        }
    }
    Ordering::Equal
}

/// Eigendecomposition of a Hermitian matrix.
pub fn eig_hermitian(h: &CMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(CoreError::NotSquare(h.nrows(), h.ncols()));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CoreError::NonFinite);
    }
    let scale = max_abs(h).max(1.0);
    let res = hermiticity_residual(h);
    if res > tol::HERM * scale {
        return Err(CoreError::NotHermitian(res));
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
            degenerate: false,
        });
    }
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let se = SymmetricEigen::new(herm);

    let mut cols: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|j| {
            let mut v: Vec<C64> = se.eigenvectors.column(j).iter().copied().collect();
            fix_phase(&mut v);
            (se.eigenvalues[j], v)
        })
        .collect();
    cols.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    let mut degenerate = false;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cols[end].0 - cols[end - 1].0 < tol::DEGEN {
            end += 1;
        }
        if end - start > 1 {
            degenerate = true;
            cols[start..end].sort_by(|a, b| lex_desc(&a.1, &b.1));
        }
        start = end;
    }

    let values = cols.iter().map(|c| c.0).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| cols[j].1[i]);
    Ok(HermitianEigen {
        values,
        vectors,
        degenerate,
    })
}

/// `f(h)` for Hermitian `h`.
pub fn hermitian_function<F: Fn(f64) -> C64>(h: &CMatrix, f: F) -> Result<CMatrix> {
    Ok(eig_hermitian(h)?.map(f))
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    hermitian_function(h, |l| C64::from_polar(1.0, -l * t))
}

/// Matrix logarithm of a positive semidefinite matrix with eigenvalues
/// clamped from below at `floor`.
pub fn log_hermitian(h: &CMatrix, floor: f64) -> Result<CMatrix> {
    hermitian_function(h, |l| C64::new(l.max(floor).ln(), 0.0))
}
