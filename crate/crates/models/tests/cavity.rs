use qtherm_channels::check_ladder_condition;
use qtherm_core::*;
use qtherm_lindblad::liouvillian_apply_matrix;
use qtherm_models::cavity::*;
use qtherm_models::{first_upward_crossing, ModelError};

/// `α = 1`, `βω = 1` on 41 levels: small enough for long integrations.
fn small() -> CavityParams {
    CavityParams::new(1.0, C64::new(0.05, 0.0), 0.1, 1.0, 40).unwrap()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn parameters_follow_the_drive() {
    let p = CavityParams::resonant_drive();
    assert!((p.alpha() - C64::new(4.0, 0.0)).norm() <= 1e-15);
    assert!((p.steady_power() - 0.16).abs() <= 1e-15);
    let nth = 1.0 / (0.1f64.exp() - 1.0);
    assert!((p.occupation() - nth).abs() <= 1e-12);
    assert!((p.steady_energy() - (nth + 16.0)).abs() <= 1e-12);
    let (down, up) = p.rates();
    assert!((down / up - 0.1f64.exp()).abs() <= 1e-12);
    assert!(p.is_weak_driving());
    assert!(p.recommended_n_max() <= p.n_max);
    assert!((adiabatic_sign_change_time(0.01) - 138.629_436_111_989_06).abs() <= 1e-9);
    assert!((adiabatic_sign_change_time(2.0 * std::f64::consts::LN_2) - 1.0).abs() <= 1e-15);
}

#[test]
fn displacement_makes_coherent_states() {
    let alpha = C64::from_polar(1.0, 0.7);
    let d = displacement(alpha, 40).unwrap();
    assert!(unitarity_residual(&d) <= 1e-10);
    for n in 0..15 {
        let oracle = (-alpha.norm_sqr() / 2.0).exp() * alpha.powu(n as u32) / factorial(n).sqrt();
        assert!((d[(n, 0)] - oracle).norm() <= 1e-12, "{n}");
    }
}

#[test]
fn reference_steady_state_is_stationary() {
    let p = CavityParams::resonant_drive();
    let ss = cavity_steady_state(&p).unwrap();
    assert!(ss.leakage <= LEAKAGE_TOL);
    let m = build_cavity(&p).unwrap();
    let pi = ss.state.matrix();
    assert!(max_abs(&liouvillian_apply_matrix(&m, pi, 0.0)) <= 1e-8);
    let obs = CavityObservables::new(&p, &m).unwrap();
    let rates = obs.rates(pi, &CMatrix::zeros(p.dim(), p.dim()));
    assert!((rates.w_dot - 0.16).abs() <= 1e-8);
    assert!((rates.q_dot + 0.16).abs() <= 1e-8);
    let u = ss.state.expect(&obs.h0).re;
    assert!((u - p.steady_energy()).abs() <= 1e-7, "{u} {}", p.steady_energy());
    assert!(edge_population(pi) <= LEAKAGE_TOL);
}

#[test]
fn undriven_cavity_relaxes_to_gibbs() {
    let mut p = small();
    p.epsilon = C64::new(0.0, 0.0);
    let ss = cavity_steady_state(&p).unwrap();
    assert!(max_abs(&(ss.state.matrix() - gibbs_state(&p).matrix())) <= 1e-12);
    let m = build_cavity(&p).unwrap();
    let dphi = m.jump_dphi(0.0).unwrap().expect("thermal cavity satisfies the ladder condition");
    assert!((dphi[EMISSION] + p.beta * p.omega).abs() <= 1e-10);
    assert!((dphi[ABSORPTION] - p.beta * p.omega).abs() <= 1e-10);
    let sigma = m.sigma_e().unwrap();
    assert!((sigma[EMISSION] - p.beta * p.omega).abs() <= 1e-10);
}

#[test]
fn drive_breaks_the_ladder_condition() {
    let p = small();
    let m = build_cavity(&p).unwrap();
    assert!(m.jump_dphi(0.0).unwrap().is_none());
    let map = m.one_step_map(0.0, 1e-3).unwrap();
    let report = check_ladder_condition(&map, &m.potential(0.0).unwrap());
    assert!(!report.satisfied);
    let w = report.witness.expect("violation comes with a witness");
    assert!(w.magnitude > 1e-6);
    assert!((w.first_gap - w.second_gap).abs() > 1e-6);
}

#[test]
fn gibbs_start_matches_closed_forms() {
    let p = small();
    let m = build_cavity(&p).unwrap();
    let rho0 = gibbs_state(&p);
    let series = cavity_series(&p, &m, &rho0, 30.0, 0.01, 250).unwrap();
    let mut full_points = 0;
    for s in &series {
        let cf = cavity_transients(&p, &rho0, s.t).unwrap();
        assert!((s.energy.w_dot - cf.energy.w_dot).abs() <= 1e-8, "{}", s.t);
        assert!((s.energy.q_dot - cf.energy.q_dot).abs() <= 1e-8, "{}", s.t);
        assert!((s.energy.u_dot - cf.energy.u_dot).abs() <= 1e-8, "{}", s.t);
        assert!((s.energy.x_dot - cf.energy.x_dot).abs() <= 1e-8, "{}", s.t);
        assert!((s.s_dot_a - cf.s_dot_a).abs() <= 1e-8, "{}", s.t);
        assert!(s.edge <= LEAKAGE_TOL);
        if let Some(f) = s.full {
            full_points += 1;
            assert!(f.s_dot.abs() <= 1e-8, "{}: {}", s.t, f.s_dot);
            assert!((f.s_dot_na - cf.s_dot_na.unwrap()).abs() <= 1e-8);
            assert!((f.s_dot_i - cf.s_dot_i.unwrap()).abs() <= 1e-8);
            assert!((f.s_dot_a - s.s_dot_a).abs() <= 1e-10);
        }
    }
    assert_eq!(full_points, 13);

    let ts: Vec<f64> = series.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = series.iter().map(|s| s.s_dot_a).collect();
    let tn = adiabatic_sign_change_time(p.gamma0);
    let crossing = first_upward_crossing(&ts, &ys).unwrap();
    assert!((crossing - tn).abs() <= 0.02);
    assert!(series.iter().filter(|s| s.t < tn - 0.02).all(|s| s.s_dot_a < 0.0));
}

#[test]
fn diagonal_start_matches_energy_closed_forms() {
    let p = small();
    let m = build_cavity(&p).unwrap();
    let mut w = vec![0.0; p.dim()];
    w[1] = 0.2;
    w[2] = 0.5;
    w[4] = 0.3;
    let rho0 = DensityOperator::diagonal(&w).unwrap();
    let series = cavity_series(&p, &m, &rho0, 20.0, 0.01, 0).unwrap();
    for s in series.iter().step_by(50) {
        let cf = cavity_transients(&p, &rho0, s.t).unwrap();
        assert!(cf.s_dot.is_none() && cf.s_dot_na.is_none() && cf.s_dot_i.is_none());
        assert!((s.energy.w_dot - cf.energy.w_dot).abs() <= 1e-8);
        assert!((s.energy.q_dot - cf.energy.q_dot).abs() <= 1e-8);
        assert!((s.energy.u_dot - cf.energy.u_dot).abs() <= 1e-8);
        assert!((s.s_dot_a - cf.s_dot_a).abs() <= 1e-8);
        assert!(s.full.is_none());
    }
}

#[test]
fn errors_are_reported() {
    let mut p = CavityParams::resonant_drive();
    p.n_max = 40;
    assert!(matches!(cavity_steady_state(&p), Err(ModelError::Truncation { .. })));
    assert!(matches!(build_cavity(&p), Err(ModelError::Truncation { .. })));
    assert!(CavityParams::new(1.0, C64::new(0.1, 0.0), 0.0, 1.0, 30).is_err());
    assert!(CavityParams::new(1.0, C64::new(0.1, 0.0), 0.1, -1.0, 30).is_err());
    assert!(CavityParams::new(1.0, C64::new(f64::NAN, 0.0), 0.1, 1.0, 30).is_err());
    assert!(CavityParams::new(1.0, C64::new(0.1, 0.0), 0.1, 1.0, 4).is_err());

    let p = small();
    let mut m = gibbs_state(&p).into_matrix();
    m[(0, 1)] = C64::new(1e-3, 0.0);
    m[(1, 0)] = C64::new(1e-3, 0.0);
    let coherent = DensityOperator::from_matrix(m).unwrap();
    assert!(matches!(cavity_transients(&p, &coherent, 1.0), Err(ModelError::BranchMismatch(_))));
    let wrong = DensityOperator::maximally_mixed(3);
    assert!(cavity_transients(&p, &wrong, 1.0).is_err());
    let model = build_cavity(&p).unwrap();
    assert!(cavity_series(&p, &model, &gibbs_state(&p), 1.0, 0.0, 0).is_err());
}

#[test]
fn upward_crossing_interpolates() {
    let ts = [0.0, 1.0, 2.0, 3.0];
    assert_eq!(first_upward_crossing(&ts, &[-2.0, -1.0, 1.0, 2.0]), Some(1.5));
    assert_eq!(first_upward_crossing(&ts, &[1.0, -1.0, -0.5, -0.1]), None);
    assert_eq!(first_upward_crossing(&ts, &[-1.0, 0.0, 1.0, 2.0]), Some(1.0));
}
