#![allow(dead_code)]

use qtherm_channels::{KrausLabel, KrausMap, KrausOperator};
use qtherm_core::{CMatrix, C64};

pub fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Generalized amplitude damping toward populations `(1 - p, p)` with
/// strength `g`; operators: no-jump (ground), decay, no-jump (excited),
/// excitation.
pub fn gad(p: f64, g: f64) -> KrausMap {
    let mut a0 = CMatrix::zeros(2, 2);
    a0[(0, 0)] = r((1.0 - p).sqrt());
    a0[(1, 1)] = r((1.0 - p).sqrt() * (1.0 - g).sqrt());
    let mut a1 = CMatrix::zeros(2, 2);
    a1[(0, 1)] = r((1.0 - p).sqrt() * g.sqrt());
    let mut a2 = CMatrix::zeros(2, 2);
    a2[(0, 0)] = r(p.sqrt() * (1.0 - g).sqrt());
    a2[(1, 1)] = r(p.sqrt());
    let mut a3 = CMatrix::zeros(2, 2);
    a3[(1, 0)] = r(p.sqrt() * g.sqrt());
    let s = ((1.0 - p) / p).ln();
    KrausMap::new(vec![
        KrausOperator::new(a0, KrausLabel::NoJump).with_sigma_e(0.0),
        KrausOperator::new(a1, KrausLabel::Jump { k: 0 }).with_sigma_e(s),
        KrausOperator::new(a2, KrausLabel::NoJump).with_sigma_e(0.0),
        KrausOperator::new(a3, KrausLabel::Jump { k: 1 }).with_sigma_e(-s),
    ])
    .unwrap()
}

/// One-step map of a classical rate process on `d` levels: jumps `|i><j|`
/// with rate `w[i][j]`, no-jump operator diagonal. Pair rule assigns
/// `σ^E = ln(w_ij / w_ji)`.
pub fn rate_map(w: &[Vec<f64>], dt: f64) -> KrausMap {
    let d = w.len();
    let mut ops = Vec::new();
    let mut m0 = CMatrix::zeros(d, d);
    for j in 0..d {
        let out: f64 = (0..d).filter(|&i| i != j).map(|i| w[i][j]).sum();
        m0[(j, j)] = r((1.0 - dt * out).sqrt());
    }
    ops.push(KrausOperator::new(m0, KrausLabel::NoJump).with_sigma_e(0.0));
    let mut k = 0;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = r((dt * w[i][j]).sqrt());
            let s = (w[i][j] / w[j][i]).ln();
            ops.push(KrausOperator::new(m, KrausLabel::Jump { k }).with_sigma_e(s));
            k += 1;
        }
    }
    KrausMap::new(ops).unwrap()
}
