mod common;

use common::{r, rate_map};
use proptest::prelude::*;
use qtherm_channels::*;
use qtherm_core::*;

fn hermitian(d: usize, xs: &[f64]) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |i, j| C64::new(xs[(i * d + j) % xs.len()], xs[(j * d + i + 7) % xs.len()]));
    (&a + a.adjoint()) * r(0.5)
}

fn unitary(d: usize, xs: &[f64]) -> CMatrix {
    expm_hermitian(&hermitian(d, xs), 1.0).unwrap()
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn rates(d: usize, xs: &[f64]) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 0.0 } else { xs[(i * d + j) % xs.len()] }).collect())
        .collect()
}

/// Rate map conjugated by `V`: ladder holds in a rotated eigenbasis.
fn rotated_rate_map(d: usize, w: &[f64], v: &[f64]) -> (KrausMap, CMatrix) {
    let base = rate_map(&rates(d, w), 0.05);
    let u = unitary(d, v);
    let ops = base
        .ops()
        .iter()
        .map(|o| KrausOperator {
            matrix: &u * &o.matrix * u.adjoint(),
            ..o.clone()
        })
        .collect();
    (KrausMap::new(ops).unwrap(), u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn maps_from_unitaries_are_complete(
        xs in prop::collection::vec(-2.0f64..2.0, 36),
        q in prop::collection::vec(0.05f64..1.0, 3),
    ) {
        let u = unitary(6, &xs);
        let b = ProjectiveBasis::computational(3);
        let map = kraus_from_unitary(&u, &normalize(&q), &b, &b).unwrap();
        prop_assert!(map.completeness_residual() <= 1e-10);
    }

    #[test]
    fn backward_of_backward_is_forward(
        xs in prop::collection::vec(-2.0f64..2.0, 16),
        q in prop::collection::vec(0.05f64..1.0, 2),
        qt in prop::collection::vec(0.05f64..1.0, 2),
    ) {
        let theta = TimeReversal::ComplexConjugation;
        let u = unitary(4, &xs);
        let b = ProjectiveBasis::computational(2);
        let map = kraus_from_unitary(&u, &normalize(&q), &b, &b)
            .unwrap()
            .with_transition_entropies(&normalize(&q), &normalize(&qt))
            .unwrap();
        let back = backward_map(&map, theta).unwrap();
        prop_assert!(back.completeness_residual() <= 1e-10);
        let twice = backward_map(&back, theta).unwrap();
        for (a, b) in twice.ops().iter().zip(map.ops()) {
            prop_assert!(max_abs(&(&a.matrix - &b.matrix)) <= 1e-12);
            prop_assert_eq!(a.sigma_e, b.sigma_e);
        }
    }

    #[test]
    fn dual_reverse_fixes_reversed_invariant(
        w in prop::collection::vec(0.1f64..2.0, 9),
        v in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let theta = TimeReversal::ComplexConjugation;
        let (map, _) = rotated_rate_map(3, &w, &v);
        let pi = invariant_state(&map).unwrap();
        let dr = dual_reverse_map(&map, &pi, theta).unwrap();
        prop_assert!(dr.completeness_residual() <= 1e-9);
        prop_assert!(invariance_residual(&dr, &theta.apply(pi.matrix())) <= 1e-9);
    }

    #[test]
    fn ladder_operators_shift_the_potential(
        w in prop::collection::vec(0.1f64..2.0, 9),
        v in prop::collection::vec(-2.0f64..2.0, 9),
        a in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        let (map, _) = rotated_rate_map(3, &w, &v);
        let pi = invariant_state(&map).unwrap();
        let phi = nonequilibrium_potential(&pi).unwrap();
        let rep = check_ladder_condition(&map, &phi);
        prop_assert!(rep.satisfied);
        let pm = phi.matrix();
        for (op, d) in map.ops().iter().zip(&rep.dphi) {
            let d = d.unwrap();
            let lhs = commutator(&pm, &op.matrix);
            prop_assert!(max_abs(&(lhs - &op.matrix * r(d))) <= 1e-8);
        }
        // mean potential shift equals the change in <Φ>
        let mut x = hermitian(3, &a);
        let t = x.trace() / r(3.0);
        x -= CMatrix::identity(3, 3) * t;
        let rho = DensityOperator::from_matrix((CMatrix::identity(3, 3) + x * r(0.2)) * r(1.0 / 3.0)).unwrap();
        let out = apply(&map, &rho);
        let mean: f64 = map
            .ops()
            .iter()
            .zip(&rep.dphi)
            .map(|(op, d)| d.unwrap() * apply_operation(op, &rho).1)
            .sum();
        let direct = phi.expect(out.matrix()) - phi.expect(rho.matrix());
        prop_assert!((mean - direct).abs() <= 1e-10);
    }

    #[test]
    fn dual_map_is_complete_and_invariant(
        w in prop::collection::vec(0.1f64..2.0, 9),
        v in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let theta = TimeReversal::ComplexConjugation;
        let (map, _) = rotated_rate_map(3, &w, &v);
        let pi = invariant_state(&map).unwrap();
        let dual = dual_map(&map, &pi, theta).unwrap();
        prop_assert!(dual.completeness_residual() <= 1e-9);
        prop_assert!(invariance_residual(&dual, pi.matrix()) <= 1e-9);
    }

    #[test]
    fn json_round_trip_is_exact(
        w in prop::collection::vec(0.1f64..2.0, 9),
        v in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let (map, _) = rotated_rate_map(3, &w, &v);
        prop_assert_eq!(KrausMap::from_json(&map.to_json()).unwrap(), map);
    }
}
