use qtherm_core::ops::{identity, sigma_x, sigma_y, sigma_z};
use qtherm_core::*;
use qtherm_models::cnot::*;
use qtherm_models::ModelError;
use qtherm_trajectories::{average_entropies, verify_detailed_ft, BackwardInit};

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn binary_entropy(p: f64) -> f64 {
    [p, 1.0 - p].iter().filter(|&&x| x > 0.0).map(|x| -x * x.ln()).sum()
}

/// Qubit basis rotated by `θ` about `y` and phased by `φ`.
fn tilted_basis(theta: f64, phi: f64) -> ProjectiveBasis {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = C64::from_polar(1.0, phi);
    ProjectiveBasis::new(vec![
        CVector::from_vec(vec![r(c), e * s]),
        CVector::from_vec(vec![r(-s), e * c]),
    ])
    .unwrap()
}

const GRID: [(f64, f64); 5] = [(0.8, 2.5), (0.3, 0.7), (1.0, 4.0), (0.05, 0.01), (0.6, 1.0)];

#[test]
fn post_gate_state_is_bell_diagonal() {
    for (alpha, beta_eps) in GRID {
        let p = CnotParams::new(alpha, beta_eps);
        let k = p.kappa();
        let xx = tensor(&sigma_x(), &sigma_x());
        let yy = tensor(&sigma_y(), &sigma_y());
        let zz = tensor(&sigma_z(), &sigma_z());
        let expected = (identity(4) + xx * r(alpha) - yy * r(alpha * k) + zz * r(k)) * r(0.25);
        let got = post_gate_state(&p);
        assert!(max_abs(&(got.matrix() - &expected)) <= 1e-12, "{alpha} {beta_eps}");

        let mut eig = got.eigen().values;
        eig.sort_by(f64::total_cmp);
        let mut want = vec![
            (1.0 - alpha) * (1.0 - k) / 4.0,
            (1.0 - alpha) * (1.0 + k) / 4.0,
            (1.0 + alpha) * (1.0 - k) / 4.0,
            (1.0 + alpha) * (1.0 + k) / 4.0,
        ];
        want.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12);
        }

        let mi = mutual_information(&got).unwrap();
        let oracle = 2.0 * 2f64.ln() - binary_entropy((1.0 + alpha) / 2.0) - binary_entropy((1.0 + k) / 2.0);
        assert!((mi - oracle).abs() <= 1e-10);
    }
}

#[test]
fn marginals_are_maximally_mixed_for_any_final_basis() {
    let half = identity(2) * r(0.5);
    for (alpha, beta_eps) in GRID {
        for (theta, phi) in [(0.0, 0.0), (0.9, 0.4), (2.1, -1.3)] {
            let p = CnotParams::new(alpha, beta_eps).with_final_bases(tilted_basis(theta, phi), tilted_basis(phi, theta));
            let after = post_gate_state(&p);
            for keep in 0..2 {
                let red = partial_trace(&after, keep).unwrap();
                assert!(max_abs(&(red.matrix() - &half)) <= 1e-12);
            }
            let measured = measured_state(&p);
            assert!((measured.matrix().trace().re - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn work_matches_closed_form_and_limits() {
    for (alpha, beta_eps) in GRID {
        for eps in [1.0, 0.37, 2.5] {
            let p = CnotParams::new(alpha, beta_eps).with_epsilon(eps);
            let excited = (-beta_eps as f64).exp() / (1.0 + (-beta_eps as f64).exp());
            assert!((first_gate_work(&p) - eps * (0.5 - excited)).abs() <= 1e-12);
            assert!((work_closed_form(&p) - first_gate_work(&p)).abs() <= 1e-12);
        }
    }
    let cold = CnotParams::new(0.5, f64::INFINITY);
    assert_eq!(thermal_weights(f64::INFINITY), [1.0, 0.0]);
    assert!((first_gate_work(&cold) - 0.5).abs() <= 1e-12);
    let hot = CnotParams::new(0.5, 0.0);
    assert!(first_gate_work(&hot).abs() <= 1e-12);
}

#[test]
fn second_gate_recovers_the_work() {
    for (alpha, beta_eps) in GRID {
        for eps in [1.0, 0.6] {
            let p = CnotParams::new(alpha, beta_eps).with_epsilon(eps);
            let sg = cnot_second_gate(&p, &measured_state(&p)).unwrap();
            assert!((sg.work_extracted - work_closed_form(&p)).abs() <= 1e-12);
            let product = tensor(&(identity(2) * r(0.5)), environment_state(beta_eps).matrix());
            assert!(trace_distance(sg.state.matrix(), &product).unwrap() <= 1e-12);
            assert!(sg.correlation <= 1e-12);
        }
    }
}

#[test]
fn second_gate_rejects_correlated_input() {
    let p = CnotParams::new(0.8, 2.5);
    let plus = CVector::from_vec(vec![r(0.5f64.sqrt()), r(0.5f64.sqrt())]);
    let entangling = DensityOperator::product(&DensityOperator::pure(&plus).unwrap(), &environment_state(f64::INFINITY));
    let err = cnot_second_gate(&p, &entangling).unwrap_err();
    assert!(matches!(err, ModelError::NotDecorrelated(c) if c > 1e-3));
    let small = DensityOperator::maximally_mixed(2);
    assert!(matches!(cnot_second_gate(&p, &small), Err(ModelError::InvalidParameter { .. })));
}

#[test]
fn degenerate_system_needs_a_basis() {
    let p = CnotParams::new(0.0, 1.0);
    assert!(matches!(build_cnot(&p), Err(ModelError::DegenerateBasis)));
    let p = p.with_initial_basis(ProjectiveBasis::computational(2));
    let proc = build_cnot(&p).unwrap();
    assert!(verify_detailed_ft(&proc).unwrap().passed());
}

#[test]
fn parameters_are_validated() {
    for (alpha, beta_eps) in [(-0.1, 1.0), (1.2, 1.0), (0.5, -1.0), (0.5, f64::NAN)] {
        let p = CnotParams::new(alpha, beta_eps);
        assert!(matches!(build_cnot(&p), Err(ModelError::InvalidParameter { .. })), "{alpha} {beta_eps}");
    }
    let p = CnotParams::new(0.5, 1.0).with_epsilon(0.0);
    assert!(p.validate().is_err());
    let p = CnotParams::new(0.5, 1.0).with_final_bases(ProjectiveBasis::computational(3), ProjectiveBasis::computational(2));
    assert!(p.validate().is_err());
}

#[test]
fn entropy_productions_are_ordered() {
    for (alpha, beta_eps) in GRID {
        let base = CnotParams::new(alpha, beta_eps);
        let ent = |init: BackwardInit| average_entropies(&build_cnot(&base.clone().with_backward_init(init)).unwrap()).unwrap();
        let product = ent(BackwardInit::Product);
        let reset = ent(BackwardInit::Reset);
        let correlated = ent(BackwardInit::Correlated);
        assert!((product.non_inclusive - product.final_correlations).abs() <= 1e-10);
        assert!(product.non_inclusive >= product.inclusive - 1e-12);
        assert!(product.inclusive >= -1e-12);
        assert!(reset.trajectory_mean >= product.trajectory_mean - 1e-12);
        assert!((correlated.trajectory_mean - correlated.inclusive).abs() <= 1e-10);
        assert!((product.trajectory_mean - product.non_inclusive).abs() <= 1e-10);
        let extra = reset.reset_extra.unwrap();
        assert!((reset.trajectory_mean - product.non_inclusive - extra).abs() <= 1e-10);
    }
}
