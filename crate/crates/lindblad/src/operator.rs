use nalgebra_sparse::convert::serial::convert_dense_csr;
use nalgebra_sparse::CsrMatrix;
use qtherm_core::{CMatrix, C64};

/// Sparse storage pays off only for large, mostly empty operators.
const SPARSE_MIN_DIM: usize = 24;
/// Operators with at most this many nonzero diagonals are stored banded.
const MAX_BANDS: usize = 8;

#[derive(Debug, Clone)]
enum Storage {
    Dense,
    /// `(offset, values)` with `A[i, i + offset] = values[i - max(0, -offset)]`.
    Banded(Vec<(isize, Vec<C64>)>),
    Sparse(CsrMatrix<C64>),
}

/// Operator kept dense, with a banded or CSR copy when those products are
/// cheaper.
#[derive(Debug, Clone)]
pub(crate) struct Operator {
    pub dense: CMatrix,
    storage: Storage,
}

impl Operator {
    pub fn new(dense: CMatrix) -> Self {
        let d = dense.nrows();
        let storage = if d < SPARSE_MIN_DIM {
            Storage::Dense
        } else if let Some(bands) = bands(&dense) {
            Storage::Banded(bands)
        } else {
            let csr = convert_dense_csr(&dense);
            if csr.nnz() * 8 <= d * d {
                Storage::Sparse(csr)
            } else {
                Storage::Dense
            }
        };
        Self { dense, storage }
    }

    /// `A X`.
    pub fn mul(&self, x: &CMatrix) -> CMatrix {
        match &self.storage {
            Storage::Dense => &self.dense * x,
            Storage::Sparse(s) => s * x,
            Storage::Banded(_) => {
                let mut out = CMatrix::zeros(self.dense.nrows(), x.ncols());
                self.mul_acc(x, C64::new(1.0, 0.0), &mut out);
                out
            }
        }
    }

    /// `out += c A X`.
    pub fn mul_acc(&self, x: &CMatrix, c: C64, out: &mut CMatrix) {
        let Storage::Banded(bands) = &self.storage else {
            *out += self.mul(x) * c;
            return;
        };
        let d = self.dense.nrows();
        let src = x.as_slice();
        let dst = out.as_mut_slice();
        for j in 0..x.ncols() {
            let col = j * d;
            for (k, vals) in bands {
                let (r0, c0) = offsets(*k);
                let s = &src[col + c0..col + c0 + vals.len()];
                let o = &mut dst[col + r0..col + r0 + vals.len()];
                for ((o, v), s) in o.iter_mut().zip(vals).zip(s) {
                    *o += c * v * s;
                }
            }
        }
    }

    /// `X A^dag`.
    pub fn mul_adjoint_right(&self, x: &CMatrix) -> CMatrix {
        let Storage::Banded(bands) = &self.storage else {
            return self.mul(&x.adjoint()).adjoint();
        };
        let n = x.nrows();
        let mut out = CMatrix::zeros(n, self.dense.nrows());
        let src = x.as_slice();
        let dst = out.as_mut_slice();
        // column r0 + m of X A^dag gains conj(A[r0 + m, c0 + m]) X[:, c0 + m]
        for (k, vals) in bands {
            let (r0, c0) = offsets(*k);
            for (m, v) in vals.iter().enumerate() {
                let v = v.conj();
                let s = &src[(c0 + m) * n..(c0 + m + 1) * n];
                let o = &mut dst[(r0 + m) * n..(r0 + m + 1) * n];
                for (o, s) in o.iter_mut().zip(s) {
                    *o += v * s;
                }
            }
        }
        out
    }
}

fn offsets(k: isize) -> (usize, usize) {
    if k >= 0 {
        (0, k as usize)
    } else {
        ((-k) as usize, 0)
    }
}

fn bands(a: &CMatrix) -> Option<Vec<(isize, Vec<C64>)>> {
    let d = a.nrows() as isize;
    let mut out = Vec::new();
    for k in -(d - 1)..d {
        let (r0, c0) = offsets(k);
        let len = (d - k.abs()) as usize;
        let vals: Vec<C64> = (0..len).map(|n| a[(r0 + n, c0 + n)]).collect();
        if vals.iter().any(|v| *v != C64::new(0.0, 0.0)) {
            if out.len() == MAX_BANDS {
                return None;
            }
            out.push((k, vals));
        }
    }
    Some(out)
}
