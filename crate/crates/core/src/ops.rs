//! Frequently used operators and kets.

use crate::{CMatrix, CVector, C64};

fn m2(a: [[C64; 2]; 2]) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| a[i][j])
}

const O: C64 = C64::new(0.0, 0.0);
const I1: C64 = C64::new(1.0, 0.0);
const IM: C64 = C64::new(0.0, 1.0);

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn sigma_x() -> CMatrix {
    m2([[O, I1], [I1, O]])
}

pub fn sigma_y() -> CMatrix {
    m2([[O, -IM], [IM, O]])
}

pub fn sigma_z() -> CMatrix {
    m2([[I1, O], [O, -I1]])
}

/// Computational basis ket `|i>` in dimension `d`.
pub fn ket(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = I1;
    v
}

/// `|i><j|` in dimension `d`.
pub fn ketbra(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = I1;
    m
}

/// Truncated annihilation operator on Fock levels `0..n`.
pub fn annihilation(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Truncated number operator.
pub fn number(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(i as f64, 0.0) } else { O })
}

/// CNOT with the first qubit as control.
pub fn cnot() -> CMatrix {
    let mut u = CMatrix::zeros(4, 4);
    u[(0, 0)] = I1;
    u[(1, 1)] = I1;
    u[(2, 3)] = I1;
    u[(3, 2)] = I1;
    u
}

/// Swap of two `d`-dimensional factors.
pub fn swap(d: usize) -> CMatrix {
    let mut u = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            u[(j * d + i, i * d + j)] = I1;
        }
    }
    u
}
