use super::*;
use crate::spectral::Grid;

fn unit_params() -> PhaseParams {
    PhaseParams::one_phase(1.0, 1.0, 1.0, 1.0, BottomSpec::Infinite)
}

fn mode_amp(u: &Field, k: i64) -> f64 {
    let g = u.grid();
    2.0 * u.spectral()[g.index_of_mode([k, 0]).unwrap()].norm()
}

#[test]
fn phi_functions_match_closed_form() {
    for z in [-40.0, -3.0, -0.6, -0.49, -1e-3, 0.0, 1e-6, 0.3] {
        let (p1, p2) = phi12(z);
        if z.abs() > 1e-2 {
            let e: f64 = z.exp();
            assert!((p1 - (e - 1.0) / z).abs() < 1e-13, "phi1 at {z}");
            assert!((p2 - (e - 1.0 - z) / (z * z)).abs() < 1e-12, "phi2 at {z}");
        } else {
            assert!((p1 - (1.0 + z / 2.0)).abs() <= z * z);
            assert!((p2 - (0.5 + z / 6.0)).abs() <= z * z);
        }
    }
}

#[test]
fn flat_state_is_an_equilibrium() {
    let g = Grid::periodic_1d(32).unwrap();
    let st = SimState::new(Field::zeros(&g), unit_params(), Model::OnePhase, 1e-3).unwrap();
    let (next, _) = step(&st, &SchemeConfig::default()).unwrap();
    assert_eq!(next.eta.max_abs(), 0.0);
}

#[test]
fn rhs_matches_linearization() {
    let g = Grid::periodic_1d(64).unwrap();
    let eta = Field::from_fn(&g, |x| 1e-4 * (2.0 * x[0]).cos()).unwrap();
    let r = rhs_one_phase(&eta, &unit_params(), &DnoMethod::default()).unwrap();
    let expect = eta.scale(-10.0);
    assert!((&r - &expect).max_abs() < 1e-3 * expect.max_abs());
}

#[test]
fn linear_part_is_exact() {
    // at amplitude 1e-9 the nonlinearity sits far below the tolerance
    let g = Grid::periodic_1d(32).unwrap();
    let a = 1e-9;
    let eta = Field::from_fn(&g, |x| a * (3.0 * x[0]).cos()).unwrap();
    let st = SimState::new(eta, unit_params(), Model::OnePhase, 0.01).unwrap();
    let cfg = SchemeConfig {
        dt: 0.01,
        ..SchemeConfig::default()
    };
    let (next, rep) = step(&st, &cfg).unwrap();
    let rate = 3.0 * (9.0 + 1.0);
    let got = mode_amp(&next.eta, 3);
    assert!((got - a * (-rate * rep.dt).exp()).abs() < 1e-12 * a + 1e-15 * a);
}

#[test]
fn small_mode_decays_at_linear_rate() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::from_fn(&g, |x| 1e-4 * (2.0 * x[0]).cos()).unwrap();
    let st = SimState::new(eta, unit_params(), Model::OnePhase, 1e-3).unwrap();
    let out = integrate_fixed(&st, &SchemeConfig::default(), 0.05, 10).unwrap();
    let got = mode_amp(&out.last().unwrap().1, 2) / 1e-4;
    assert!((got / (-0.5f64).exp() - 1.0).abs() < 1e-3);
}

#[test]
fn etd2_is_second_order() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::from_fn(&g, |x| 0.1 * x[0].cos() + 0.05 * (2.0 * x[0]).sin()).unwrap();
    let st = SimState::new(eta, unit_params(), Model::OnePhase, 1e-2).unwrap();
    let cfg = SchemeConfig::default();
    let end = |n| integrate_fixed(&st, &cfg, 0.1, n).unwrap().pop().unwrap().1;
    let (a, b, c) = (end(10), end(20), end(40));
    let ratio = (&a - &b).l2_norm() / (&b - &c).l2_norm();
    assert!((3.0..5.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn mean_is_conserved() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::from_fn(&g, |x| 0.3 + 0.1 * x[0].cos()).unwrap();
    let p = PhaseParams::one_phase(1.0, 1.0, 1.0, 1.0, BottomSpec::Flat { depth: 2.0 });
    let st = SimState::new(eta, p, Model::OnePhase, 1e-3).unwrap();
    let out = integrate_fixed(&st, &SchemeConfig::default(), 0.02, 20).unwrap();
    let m = out.last().unwrap().1.mean();
    assert!((m - 0.3).abs() < 1e-12);
}

#[test]
fn mollified_freezes_for_large_eps() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::from_fn(&g, |x| 0.1 * x[0].cos()).unwrap();
    let st = SimState::new(eta.clone(), unit_params(), Model::OnePhase, 1e-3).unwrap();
    let cfg = SchemeConfig {
        kind: SchemeKind::Mollified { eps: 2.0 },
        ..SchemeConfig::default()
    };
    let (next, _) = step(&st, &cfg).unwrap();
    assert_eq!((&next.eta - &eta).max_abs(), 0.0);
}

#[test]
fn mollified_rejects_unstable_step() {
    let g = Grid::periodic_1d(64).unwrap();
    let eta = Field::from_fn(&g, |x| 0.1 * x[0].cos()).unwrap();
    let st = SimState::new(eta, unit_params(), Model::OnePhase, 0.1).unwrap();
    let cfg = SchemeConfig {
        kind: SchemeKind::Mollified { eps: 0.1 },
        dt: 0.1,
        ..SchemeConfig::default()
    };
    match step(&st, &cfg) {
        Err(Error::StepTooLarge { suggested, .. }) => {
            assert!(suggested < 0.1);
            let ok = SchemeConfig {
                dt: suggested,
                ..cfg
            };
            let st = SimState {
                dt_next: suggested,
                ..st
            };
            assert!(step(&st, &ok).is_ok());
        }
        other => panic!("expected a step rejection, got {other:?}"),
    }
}

#[test]
fn scheme_constraints() {
    let mut c = SchemeConfig::default();
    assert!(c.violations(1).is_empty());
    c.s = 2.0;
    let v = c.violations(2);
    assert_eq!(v.len(), 2, "{v:?}");
    c.s = 2.4;
    c.delta = 0.5;
    assert!(c.violations(1).is_empty());
    assert_eq!(c.violations(2).len(), 1);
}

#[test]
fn dilation_moves_modes() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::from_fn(&g, |x| 0.4 * (2.0 * x[0]).sin()).unwrap();
    let d = dilate(&eta, 2).unwrap();
    let expect = Field::from_fn(&g, |x| 0.2 * (4.0 * x[0]).sin()).unwrap();
    assert!((&d - &expect).max_abs() < 1e-15);
    assert!(dilate(&eta, 6).is_err());
    assert_eq!((&dilate(&eta, 1).unwrap() - &eta).max_abs(), 0.0);
}

#[test]
fn scaling_of_trivial_data() {
    let g = Grid::periodic_1d(32).unwrap();
    let z = Field::zeros(&g);
    let r = scaling_check(&z, &unit_params(), 2, 0.01, 4, &SchemeConfig::default()).unwrap();
    assert_eq!(r.discrepancy, 0.0);
    let eta = Field::from_fn(&g, |x| 0.01 * x[0].cos()).unwrap();
    let r = scaling_check(&eta, &unit_params(), 1, 0.01, 4, &SchemeConfig::default()).unwrap();
    assert_eq!(r.discrepancy, 0.0);
}

#[test]
fn identical_data_stay_identical() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::from_fn(&g, |x| 0.1 * x[0].cos()).unwrap();
    let r = stability_experiment(
        &eta,
        &eta,
        &unit_params(),
        Model::OnePhase,
        &SchemeConfig::default(),
        0.01,
        5,
    )
    .unwrap();
    assert_eq!(r.max_difference, 0.0);
    assert!(r.ratios.is_empty());
}

#[test]
fn smoothness_of_flat_state() {
    let g = Grid::periodic_1d(32).unwrap();
    let r = residual_smoothness_check(
        &[(0.0, Field::zeros(&g))],
        &unit_params(),
        Model::OnePhase,
        &SchemeConfig::default(),
        &SmoothnessConfig::default(),
    )
    .unwrap();
    assert_eq!(r.samples[0].relative_size, 0.0);
    assert!(!r.conclusive());
}

#[test]
fn residual_is_quadratic_in_amplitude() {
    let g = Grid::periodic_1d(64).unwrap();
    let size = |a: f64| {
        let eta = Field::from_fn(&g, |x| a * (x[0].cos() + 0.5 * (2.0 * x[0]).sin())).unwrap();
        let r = residual_smoothness_check(
            &[(0.0, eta)],
            &PhaseParams::one_phase(1.0, 1.0, 1.0, 0.0, BottomSpec::Infinite),
            Model::OnePhase,
            &SchemeConfig::default(),
            &SmoothnessConfig::default(),
        )
        .unwrap();
        r.samples[0].relative_size
    };
    let (a, b) = (size(0.004), size(0.002));
    // without gravity ||g|| / ||T eta|| is linear in the amplitude
    assert!((a / b - 2.0).abs() < 0.1, "{a} {b}");
}

#[test]
fn run_reports_monitor_trip() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::from_fn(&g, |x| 0.5 * x[0].cos()).unwrap();
    let p = PhaseParams::one_phase(1.0, 1.0, 1.0, 1.0, BottomSpec::Flat { depth: 0.52 });
    let spec = SimulationSpec {
        initial: eta,
        params: p,
        model: Model::OnePhase,
        scheme: SchemeConfig::default(),
        t_end: 0.01,
        monitors: MonitorConfig {
            h_floor: 0.05,
            ..MonitorConfig::default()
        },
        diagnostics_every: 1,
        snapshot_every: 0,
    };
    let out = run_simulation(&spec).unwrap();
    match out.termination {
        Termination::Monitor { kind, .. } => assert_eq!(kind, MonitorKind::Separation),
        t => panic!("unexpected {t:?}"),
    }
    assert_eq!(out.steps, 0);
}

#[test]
fn run_flat_data_is_constant() {
    let g = Grid::periodic_1d(16).unwrap();
    let spec = SimulationSpec {
        initial: Field::constant(&g, 0.1),
        params: unit_params(),
        model: Model::OnePhase,
        scheme: SchemeConfig::default(),
        t_end: 0.005,
        monitors: MonitorConfig::default(),
        diagnostics_every: 1,
        snapshot_every: 1,
    };
    let out = run_simulation(&spec).unwrap();
    assert!(matches!(out.termination, Termination::Completed));
    assert_eq!(out.final_state.t, 0.005);
    for (_, s) in &out.snapshots {
        assert_eq!((s - &spec.initial).max_abs(), 0.0);
    }
    assert_eq!(out.diagnostics.len(), out.steps + 1);
}
