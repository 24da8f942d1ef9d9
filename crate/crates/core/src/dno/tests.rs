use super::*;
use crate::spectral::Grid;

fn mode_coeff(u: &Field, k: i64) -> f64 {
    let g = u.grid();
    2.0 * u.spectral()[g.index_of_mode([k, 0]).unwrap()].re
}

#[test]
fn flat_multipliers() {
    let m = dno_flat_multiplier(&BottomSpec::Flat { depth: 1.0 }, Side::Lower).unwrap();
    assert!((m(1.0) - 0.761_594_155_955_764_9).abs() < 1e-15);
    let up = dno_flat_multiplier(&BottomSpec::Infinite, Side::Upper).unwrap();
    assert_eq!(up(3.0), -3.0);
    let g = Grid::periodic_1d(16).unwrap();
    let graph = BottomSpec::Graph {
        surface: Field::constant(&g, -1.0),
    };
    assert!(dno_flat_multiplier(&graph, Side::Lower).is_err());
    assert!(BottomSpec::Flat { depth: 0.0 }.validate().is_err());
}

#[test]
fn series_flat_is_exact() {
    let g = Grid::periodic_1d(64).unwrap();
    let eta = Field::zeros(&g);
    let f = Field::from_fn(&g, |x| (2.0 * x[0]).cos()).unwrap();
    let r = dno_series(&eta, &f, 8, &BottomSpec::Infinite).unwrap();
    assert!((&r.boundary_value - &f.scale(2.0)).max_abs() < 1e-13);
}

#[test]
fn series_cauchy_tail() {
    let g = Grid::periodic_1d(64).unwrap();
    let eta = Field::from_fn(&g, |x| 0.05 * x[0].cos()).unwrap();
    let f = Field::from_fn(&g, |x| x[0].cos()).unwrap();
    let r2 = dno_series(&eta, &f, 2, &BottomSpec::Infinite).unwrap();
    let r3 = dno_series(&eta, &f, 3, &BottomSpec::Infinite).unwrap();
    let diff = (&r2.boundary_value - &r3.boundary_value).l2_norm();
    let MethodReport::Series { term_norms, .. } = &r3.method else {
        panic!()
    };
    assert!(diff <= term_norms[3] * (1.0 + 1e-9));
}

#[test]
fn elliptic_matches_series_on_small_surface() {
    let g = Grid::periodic_1d(64).unwrap();
    let eta = Field::from_fn(&g, |x| 0.05 * x[0].cos()).unwrap();
    let f = Field::from_fn(&g, |x| x[0].cos()).unwrap();
    let bottom = BottomSpec::Flat { depth: 1.0 };
    let s = dno_series(&eta, &f, 12, &bottom).unwrap().boundary_value;
    let e = dno_elliptic(&eta, &f, &bottom, 65).unwrap().boundary_value;
    let err = (&s - &e).l2_norm() / s.l2_norm();
    assert!(err < 2e-3, "{err}");
}

#[test]
fn upper_is_reflection() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::zeros(&g);
    let f = Field::from_fn(&g, |x| (3.0 * x[0]).cos()).unwrap();
    let r = dno_apply(
        &eta,
        &f,
        &BottomSpec::Infinite,
        Side::Upper,
        &DnoMethod::default(),
    )
    .unwrap();
    assert!((mode_coeff(&r.boundary_value, 3) + 3.0).abs() < 1e-13);
}

#[test]
fn separation_is_enforced() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::from_fn(&g, |x| 0.5 * x[0].cos()).unwrap();
    let f = Field::from_fn(&g, |x| x[0].cos()).unwrap();
    let bottom = BottomSpec::Flat { depth: 0.4 };
    assert!(matches!(
        dno_series(&eta, &f, 4, &bottom),
        Err(Error::Geometry { .. })
    ));
    assert!(matches!(
        dno_elliptic(&eta, &f, &bottom, 17),
        Err(Error::Geometry { .. })
    ));
}

#[test]
fn remainder_vanishes_when_flat() {
    let g = Grid::periodic_1d(64).unwrap();
    let eta = Field::zeros(&g);
    let fit = dno_remainder_order(
        &eta,
        &BottomSpec::Infinite,
        &[1, 2, 4, 8],
        &DnoMethod::default(),
        CutoffPair::default(),
    )
    .unwrap();
    assert!(fit.vanishing());
    assert!(fit.samples.iter().all(|s| s.defect < 1e-13));
}

#[test]
fn contraction_is_symmetric() {
    let g = Grid::periodic_1d(64).unwrap();
    let e1 = Field::from_fn(&g, |x| 0.1 * x[0].cos()).unwrap();
    let e2 = Field::from_fn(&g, |x| 0.1 * x[0].cos() + 0.01 * (2.0 * x[0]).cos()).unwrap();
    let f = Field::from_fn(&g, |x| (3.0 * x[0]).sin()).unwrap();
    let m = DnoMethod::default();
    let a = dno_contraction_check(&e1, &e2, &f, &BottomSpec::Infinite, 2.5, &m).unwrap();
    let b = dno_contraction_check(&e2, &e1, &f, &BottomSpec::Infinite, 2.5, &m).unwrap();
    assert!((a.ratio().unwrap() - b.ratio().unwrap()).abs() < 1e-14);
    let z = dno_contraction_check(&e1, &e1, &f, &BottomSpec::Infinite, 2.5, &m).unwrap();
    assert_eq!(z.numerator, 0.0);
    assert!(z.ratio().is_none());
}

#[test]
fn velocity_of_constant_data_vanishes() {
    let g = Grid::periodic_1d(32).unwrap();
    let eta = Field::from_fn(&g, |x| 0.1 * x[0].cos()).unwrap();
    let f = Field::constant(&g, 2.0);
    let r = dno_elliptic(&eta, &f, &BottomSpec::Flat { depth: 1.0 }, 17).unwrap();
    let v = reconstruct_velocity(&r, 1.0).unwrap();
    assert!(v.vertical.iter().all(|u| u.abs() < 1e-9));
    assert!(v.horizontal[0].iter().all(|u| u.abs() < 1e-9));
    let s = dno_series(&eta, &f, 4, &BottomSpec::Flat { depth: 1.0 }).unwrap();
    assert!(reconstruct_velocity(&s, 1.0).is_err());
}
