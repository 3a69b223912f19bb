//! Density operators, projective measurement bases and partial traces.

use crate::error::{CoreError, Result};
use crate::linalg::{eig_hermitian, hermiticity_residual, max_abs, tensor, HermitianEigen};
use crate::protocol::TimeReversal;
use crate::{tol, CMatrix, CVector, C64};

/// Hermitian, unit-trace, positive semidefinite matrix with subsystem
/// dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DensityOperator {
    /// Validates and Hermitizes `matrix`; `dims` must multiply to its size.
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(CoreError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        let d = matrix.nrows();
        let prod: usize = dims.iter().product();
        if prod != d || dims.is_empty() {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                got: prod,
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::NonFinite);
        }
        let res = hermiticity_residual(&matrix);
        if res > tol::HERM {
            return Err(CoreError::NotHermitian(res));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(CoreError::InvalidTrace(tr.re));
        }
        let matrix = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let eig = eig_hermitian(&matrix)?;
        let min = eig.values.first().copied().unwrap_or(0.0);
        if min < -tol::PSD {
            return Err(CoreError::NotPsd(min));
        }
        Ok(Self { matrix, dims })
    }

    /// Single-factor state.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, vec![d])
    }

    /// Wraps a matrix the caller already knows to be a valid state, after
    /// Hermitizing it. Only dimensions are checked.
    pub fn from_trusted(matrix: CMatrix, dims: Vec<usize>) -> Self {
        assert_eq!(
            dims.iter().product::<usize>(),
            matrix.nrows(),
            "dims do not match matrix size"
        );
        let matrix = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        Self { matrix, dims }
    }

    /// Re-normalizes the trace of a Hermitian, positive matrix and validates.
    pub fn normalized(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let tr = matrix.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(CoreError::InvalidTrace(tr));
        }
        Self::new(matrix / C64::new(tr, 0.0), dims)
    }

    /// `|psi><psi|` for a normalized ket.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if (n - 1.0).abs() > tol::TRACE {
            return Err(CoreError::InvalidTrace(n * n));
        }
        Self::from_matrix(psi * psi.adjoint())
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
            dims: vec![d],
        }
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        let d = p.len();
        let m = CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(p[i], 0.0) } else { C64::new(0.0, 0.0) });
        Self::from_matrix(m)
    }

    /// Mixture `sum_i w_i |v_i><v_i|` over the vectors of `basis`.
    pub fn from_spectrum(weights: &[f64], basis: &ProjectiveBasis) -> Result<Self> {
        if weights.len() != basis.len() {
            return Err(CoreError::DimensionMismatch {
                expected: basis.len(),
                got: weights.len(),
            });
        }
        let d = basis.dim();
        let mut m = CMatrix::zeros(d, d);
        for (w, v) in weights.iter().zip(basis.vectors()) {
            m += v * v.adjoint() * C64::new(*w, 0.0);
        }
        Self::from_matrix(m)
    }

    /// `a ⊗ b` with concatenated subsystem dimensions.
    pub fn product(a: &Self, b: &Self) -> Self {
        let mut dims = a.dims.clone();
        dims.extend_from_slice(&b.dims);
        Self {
            matrix: tensor(&a.matrix, &b.matrix),
            dims,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same matrix, regrouped into new subsystem factors.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        let prod: usize = dims.iter().product();
        if prod != self.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim(),
                got: prod,
            });
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn eigen(&self) -> HermitianEigen {
        eig_hermitian(&self.matrix).expect("density operator is Hermitian")
    }

    /// `Tr[rho a]`.
    pub fn expect(&self, a: &CMatrix) -> C64 {
        let n = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                s += self.matrix[(i, k)] * a[(k, i)];
            }
        }
        s
    }

    /// Diagonal entries in the reference basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// `<v|rho|v>`.
    pub fn weight(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }

    pub fn time_reversed(&self, theta: TimeReversal) -> Self {
        Self {
            matrix: theta.apply(&self.matrix),
            dims: self.dims.clone(),
        }
    }

    /// Largest entry of the commutator with `a`.
    pub fn commutes_with(&self, a: &CMatrix, tol: f64) -> bool {
        max_abs(&(&self.matrix * a - a * &self.matrix)) <= tol
    }
}

/// Partial trace over every factor except `keep`.
pub fn partial_trace(rho: &DensityOperator, keep: usize) -> Result<DensityOperator> {
    let dims = rho.dims();
    if dims.len() < 2 {
        return Err(CoreError::NotBipartite);
    }
    if keep >= dims.len() {
        return Err(CoreError::SubsystemOutOfRange {
            index: keep,
            count: dims.len(),
        });
    }
    let dk = dims[keep];
    let inner: usize = dims[keep + 1..].iter().product();
    let outer: usize = dims[..keep].iter().product();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut s = C64::new(0.0, 0.0);
            for o in 0..outer {
                for i in 0..inner {
                    let r = (o * dk + a) * inner + i;
                    let c = (o * dk + b) * inner + i;
                    s += m[(r, c)];
                }
            }
            out[(a, b)] = s;
        }
    }
    Ok(DensityOperator::from_trusted(out, vec![dk]))
}

/// Ordered set of orthonormal kets defining rank-1 projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveBasis {
    vectors: Vec<CVector>,
    complete: bool,
}

impl ProjectiveBasis {
    /// Checks pairwise orthonormality; completeness is recorded, not required.
    pub fn new(vectors: Vec<CVector>) -> Result<Self> {
        let d = vectors.first().map(|v| v.len()).unwrap_or(0);
        if let Some(v) = vectors.iter().find(|v| v.len() != d) {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
        let mut worst = 0.0_f64;
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate().skip(i) {
                let g = a.dotc(b);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - C64::new(target, 0.0)).norm());
            }
        }
        if worst > tol::BASIS {
            return Err(CoreError::NotOrthonormal(worst));
        }
        let complete = vectors.len() == d;
        Ok(Self { vectors, complete })
    }

    /// Columns of a matrix already known to be unitary.
    pub fn from_orthonormal_columns(u: &CMatrix) -> Self {
        let vectors = (0..u.ncols()).map(|j| u.column(j).into_owned()).collect::<Vec<_>>();
        let complete = vectors.len() == u.nrows();
        Self { vectors, complete }
    }

    /// Validated columns of `u`.
    pub fn from_columns(u: &CMatrix) -> Result<Self> {
        Self::new((0..u.ncols()).map(|j| u.column(j).into_owned()).collect())
    }

    pub fn computational(d: usize) -> Self {
        Self::from_orthonormal_columns(&CMatrix::identity(d, d))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.vectors.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &CVector {
        &self.vectors[i]
    }

    pub fn projector(&self, i: usize) -> CMatrix {
        &self.vectors[i] * self.vectors[i].adjoint()
    }

    /// Kets as the columns of a matrix.
    pub fn as_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.vectors)
    }

    /// Product basis, index `n * b.len() + nu`.
    pub fn tensor(&self, b: &Self) -> Self {
        let mut vectors = Vec::with_capacity(self.len() * b.len());
        for u in &self.vectors {
            for v in &b.vectors {
                vectors.push(u.kronecker(v));
            }
        }
        Self {
            vectors,
            complete: self.complete && b.complete,
        }
    }

    pub fn time_reversed(&self, theta: TimeReversal) -> Self {
        Self {
            vectors: self.vectors.iter().map(|v| theta.apply_vector(v)).collect(),
            complete: self.complete,
        }
    }

    /// `max |sum_n P_n - I|`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let mut s = CMatrix::zeros(d, d);
        for v in &self.vectors {
            s += v * v.adjoint();
        }
        max_abs(&(s - CMatrix::identity(d, d)))
    }
}
