#![allow(dead_code)]

use qtherm_channels::{KrausLabel, KrausMap, KrausOperator};
use qtherm_core::ops::{cnot, identity, sigma_x};
use qtherm_core::*;
use qtherm_trajectories::*;

pub fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn thermal_weights(beta_eps: f64) -> Vec<f64> {
    let z = 1.0 + (-beta_eps).exp();
    vec![1.0 / z, (-beta_eps).exp() / z]
}

/// `|+>, |->` system basis.
pub fn plus_minus() -> ProjectiveBasis {
    let s = 0.5f64.sqrt();
    ProjectiveBasis::new(vec![
        CVector::from_vec(vec![r(s), r(s)]),
        CVector::from_vec(vec![r(s), r(-s)]),
    ])
    .unwrap()
}

/// Control qubit `(I + α σ_x)/2`, thermal target, energy-basis finals.
pub fn cnot_process(alpha: f64, beta_eps: f64, init: BackwardInit) -> BipartiteProcess {
    let rho_s = DensityOperator::from_matrix((identity(2) + sigma_x() * r(alpha)) * r(0.5)).unwrap();
    let rho_e = DensityOperator::diagonal(&thermal_weights(beta_eps)).unwrap();
    let comp = ProjectiveBasis::computational(2);
    let s = Part::with_basis(rho_s, plus_minus(), comp.clone(), "system").unwrap();
    let e = Part::with_basis(rho_e, comp.clone(), comp, "environment").unwrap();
    BipartiteProcess::new(s, e, Protocol::unitary(cnot()).unwrap())
        .unwrap()
        .with_backward_init(init)
}

pub fn all_inits(d_s: usize, d_e: usize) -> Vec<BackwardInit> {
    let uniform = |d: usize| vec![1.0 / d as f64; d];
    let skew = |d: usize| {
        let w: Vec<f64> = (1..=d).map(|i| i as f64).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    vec![
        BackwardInit::Correlated,
        BackwardInit::Product,
        BackwardInit::Reset,
        BackwardInit::Custom {
            system: skew(d_s),
            environment: vec![uniform(d_e)],
        },
    ]
}

/// Thermalizing qubit map toward `(1 - p, p)` with strength `g`:
/// no-jump (ground), decay, no-jump (excited), excitation.
pub fn thermalizing(p: f64, g: f64) -> KrausMap {
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

/// Deterministic Hermitian fill from a seed vector.
pub fn hermitian(d: usize, xs: &[f64]) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |i, j| C64::new(xs[(i * d + j) % xs.len()], xs[(j * d + i + 5) % xs.len()]));
    (&a + a.adjoint()) * r(0.5)
}

pub fn unitary(d: usize, xs: &[f64]) -> CMatrix {
    expm_hermitian(&hermitian(d, xs), 1.0).unwrap()
}

/// State with spectrum `w` in the eigenbasis of a random unitary.
pub fn rotated_state(w: &[f64], xs: &[f64]) -> (DensityOperator, ProjectiveBasis) {
    let d = w.len();
    let u = unitary(d, xs);
    let basis = ProjectiveBasis::from_orthonormal_columns(&u);
    (DensityOperator::from_spectrum(w, &basis).unwrap(), basis)
}

pub fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}
