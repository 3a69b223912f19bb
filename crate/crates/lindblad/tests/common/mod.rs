#![allow(dead_code)]

use qtherm_core::ops::ketbra;
use qtherm_core::*;
use qtherm_lindblad::*;

pub fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Qubit `H = ε|1><1|` with decay and excitation `√Γ_↓ σ_-`, `√Γ_↑ σ_+`.
pub fn thermal_qubit(eps: f64, down: f64, up: f64) -> LindbladModel {
    let mut h = CMatrix::zeros(2, 2);
    h[(1, 1)] = r(eps);
    let jumps = vec![
        JumpOperator::new(ketbra(2, 0, 1) * r(down.sqrt())),
        JumpOperator::new(ketbra(2, 1, 0) * r(up.sqrt())),
    ];
    LindbladModel::new(h, jumps).unwrap()
}

/// Three levels with one thermal pair per transition, each at its own
/// `β_r`; `rates[r] = (γ_r, β_r)` for transitions (0,1), (1,2), (0,2).
pub fn qutrit(energies: [f64; 3], rates: [(f64, f64); 3]) -> LindbladModel {
    let mut h = CMatrix::zeros(3, 3);
    for i in 0..3 {
        h[(i, i)] = r(energies[i]);
    }
    let pairs = [(0, 1), (1, 2), (0, 2)];
    let mut jumps = Vec::new();
    for ((i, j), (g, beta)) in pairs.iter().zip(rates) {
        let w = energies[*j] - energies[*i];
        let n = 1.0 / ((beta * w).exp() - 1.0);
        jumps.push(JumpOperator::new(ketbra(3, *i, *j) * r((g * (n + 1.0)).sqrt())));
        jumps.push(JumpOperator::new(ketbra(3, *j, *i) * r((g * n).sqrt())));
    }
    LindbladModel::new(h, jumps).unwrap()
}

pub fn gibbs(energies: &[f64], beta: f64) -> DensityOperator {
    let w: Vec<f64> = energies.iter().map(|e| (-beta * e).exp()).collect();
    let z: f64 = w.iter().sum();
    DensityOperator::diagonal(&w.iter().map(|x| x / z).collect::<Vec<_>>()).unwrap()
}

pub fn qubit_state(p1: f64, coh: C64) -> DensityOperator {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = r(1.0 - p1);
    m[(1, 1)] = r(p1);
    m[(0, 1)] = coh;
    m[(1, 0)] = coh.conj();
    DensityOperator::from_matrix(m).unwrap()
}
