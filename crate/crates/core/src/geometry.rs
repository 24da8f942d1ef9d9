//! Mean curvature, its paralinearization, distances to the rigid
//! boundaries, and the energy.

use crate::dno::{BottomSpec, Side};
use crate::paradiff::{CutoffPair, ParaOp};
use crate::spectral::{Field, Vec2};
use crate::symbols::{curvature_matrix, ell_symbol, ell_value};
use crate::twophase::PhaseParams;

/// H(eta) = -div(grad eta / sqrt(1 + |grad eta|^2)).
pub fn mean_curvature(eta: &Field) -> Field {
    let grad = eta.gradient();
    let w: Vec<f64> = (0..eta.grid().len())
        .map(|i| {
            let q: f64 = grad.iter().map(|g| g.values()[i].powi(2)).sum();
            1.0 / (1.0 + q).sqrt()
        })
        .collect();
    let w = Field::new(eta.grid(), w).expect("weights are finite");
    let flux: Vec<Field> = grad.iter().map(|g| g.mul_dealiased(&w)).collect();
    Field::divergence(&flux).scale(-1.0)
}

#[derive(Debug, Clone)]
pub struct CurvatureResult {
    pub h_field: Field,
    pub m_matrix: Vec<[[f64; 2]; 2]>,
    /// H(eta) - T_ell eta
    pub remainder: Field,
    /// Largest |M xi . xi - ell(x, xi)| over the sampled points.
    pub symbol_mismatch: f64,
}

pub fn curvature_paralinearization(
    eta: &Field,
    cutoffs: CutoffPair,
) -> crate::Result<CurvatureResult> {
    let h = mean_curvature(eta);
    let grad = eta.gradient();
    let p: Vec<Vec2> = (0..eta.grid().len())
        .map(|i| {
            [
                grad[0].values()[i],
                grad.get(1).map_or(0.0, |g| g.values()[i]),
            ]
        })
        .collect();
    let m: Vec<[[f64; 2]; 2]> = p.iter().map(|q| curvature_matrix(*q)).collect();
    let mut mismatch = 0.0f64;
    for (i, mi) in m.iter().enumerate() {
        let xi1 = if eta.grid().dim() == 1 {
            0.0
        } else {
            -2.0 + (i % 5) as f64
        };
        let xi = [1.0 + (i % 7) as f64, xi1];
        let q =
            mi[0][0] * xi[0] * xi[0] + 2.0 * mi[0][1] * xi[0] * xi[1] + mi[1][1] * xi[1] * xi[1];
        mismatch = mismatch.max((q - ell_value(p[i], xi)).abs());
    }
    let tl = ParaOp::new(ell_symbol(eta), cutoffs).apply(eta)?;
    Ok(CurvatureResult {
        remainder: &h - &tl,
        h_field: h,
        m_matrix: m,
        symbol_mismatch: mismatch,
    })
}

fn boundary_heights(eta: &Field, bottom: &BottomSpec, side: Side) -> Option<Vec<f64>> {
    match bottom {
        BottomSpec::Infinite => None,
        BottomSpec::Flat { depth } => Some(vec![
            match side {
                Side::Lower => -depth,
                Side::Upper => *depth,
            };
            eta.grid().len()
        ]),
        BottomSpec::Graph { surface } => Some(surface.values().to_vec()),
    }
}

fn vertical_gap(eta: &Field, b: &[f64], side: Side) -> f64 {
    let sign = match side {
        Side::Lower => 1.0,
        Side::Upper => -1.0,
    };
    eta.values()
        .iter()
        .zip(b)
        .map(|(a, c)| sign * (a - c))
        .fold(f64::INFINITY, f64::min)
}

/// Smallest vertical gap between the interface and a rigid boundary;
/// negative when they cross.
pub fn vertical_distance(eta: &Field, bottom: &BottomSpec, side: Side) -> f64 {
    boundary_heights(eta, bottom, side).map_or(f64::INFINITY, |b| vertical_gap(eta, &b, side))
}

/// (vertical, euclidean) distance between the interface and a rigid
/// boundary; infinite for an unbounded layer. The euclidean distance is
/// taken between grid points and costs O(N^2).
pub fn boundary_distance(eta: &Field, bottom: &BottomSpec, side: Side) -> (f64, f64) {
    let Some(b) = boundary_heights(eta, bottom, side) else {
        return (f64::INFINITY, f64::INFINITY);
    };
    let g = eta.grid();
    let e = eta.values();
    let vertical = vertical_gap(eta, &b, side);
    let pts: Vec<Vec2> = g.points().collect();
    let per = g.periods();
    let mut best = f64::INFINITY;
    for (i, pi) in pts.iter().enumerate() {
        for (j, pj) in pts.iter().enumerate() {
            let mut d2 = (e[i] - b[j]).powi(2);
            for a in 0..g.dim() {
                let dx = (pi[a] - pj[a]).abs();
                d2 += dx.min(per[a] - dx).powi(2);
            }
            best = best.min(d2);
        }
    }
    let euclid = if vertical <= 0.0 {
        vertical.min(0.0)
    } else {
        best.sqrt()
    };
    (vertical, euclid)
}

/// Smallest vertical gap to either rigid boundary.
pub fn vertical_separation(eta: &Field, params: &PhaseParams) -> f64 {
    let lower = vertical_distance(eta, &params.bottom_minus, Side::Lower);
    if params.is_one_phase() {
        return lower;
    }
    lower.min(vertical_distance(eta, &params.bottom_plus, Side::Upper))
}

/// Smallest separation from either rigid boundary.
pub fn separation(eta: &Field, params: &PhaseParams) -> (f64, f64) {
    let (v1, e1) = boundary_distance(eta, &params.bottom_minus, Side::Lower);
    if params.is_one_phase() {
        return (v1, e1);
    }
    let (v2, e2) = boundary_distance(eta, &params.bottom_plus, Side::Upper);
    (v1.min(v2), e1.min(e2))
}

/// E = s int sqrt(1 + |grad eta|^2) + ([rho] g / 2) int eta^2.
pub fn energy(eta: &Field, params: &PhaseParams) -> f64 {
    let dv = eta.grid().cell_volume();
    let grad = eta.gradient();
    let area: f64 = (0..eta.grid().len())
        .map(|i| {
            let q: f64 = grad.iter().map(|g| g.values()[i].powi(2)).sum();
            (1.0 + q).sqrt()
        })
        .sum::<f64>()
        * dv;
    let pot: f64 = eta.values().iter().map(|v| v * v).sum::<f64>() * dv;
    params.sigma * area + 0.5 * params.density_jump() * params.gravity * pot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn curvature_of_cosine() {
        let g = Grid::periodic_1d(128).unwrap();
        let a = 0.5;
        let eta = Field::from_fn(&g, |x| a * x[0].cos()).unwrap();
        let h = mean_curvature(&eta);
        assert!((h.values()[0] - a).abs() < 1e-10);
        let exact = Field::from_fn(&g, |x| {
            a * x[0].cos() * (1.0 + a * a * x[0].sin().powi(2)).powf(-1.5)
        })
        .unwrap();
        assert!((&h - &exact).max_abs() < 1e-8);
        assert!(h.mean().abs() < 1e-15);
    }

    #[test]
    fn small_amplitude_curvature_is_linear() {
        let g = Grid::periodic_1d(64).unwrap();
        let eta = Field::from_fn(&g, |x| 1e-4 * (3.0 * x[0]).cos()).unwrap();
        let h = mean_curvature(&eta);
        let lin = eta.scale(9.0);
        assert!((&h - &lin).max_abs() < 1e-6 * lin.max_abs());
    }

    #[test]
    fn m_eigenvalues_for_unit_slope() {
        let m = curvature_matrix([1.0, 0.0]);
        assert!((m[0][0] - 2f64.powf(-1.5)).abs() < 1e-15);
        assert!((m[1][1] - 2f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(m[0][1], 0.0);
    }

    #[test]
    fn flat_paralinearization_remainder_vanishes() {
        let g = Grid::periodic_2d(16, 16).unwrap();
        let eta = Field::zeros(&g);
        let r = curvature_paralinearization(&eta, CutoffPair::default()).unwrap();
        assert_eq!(r.remainder.max_abs(), 0.0);
        let eta = Field::from_fn(&g, |x| 0.3 * (x[0] + 2.0 * x[1]).sin()).unwrap();
        let r = curvature_paralinearization(&eta, CutoffPair::default()).unwrap();
        assert!(r.symbol_mismatch < 1e-12);
    }

    #[test]
    fn distances() {
        let g = Grid::periodic_1d(32).unwrap();
        let flat = BottomSpec::Flat { depth: 1.0 };
        let (v, e) = boundary_distance(&Field::zeros(&g), &flat, Side::Lower);
        assert!((v - 1.0).abs() < 1e-15 && (e - 1.0).abs() < 1e-15);
        let eta = Field::from_fn(&g, |x| 0.3 * x[0].cos()).unwrap();
        let (v, e) = boundary_distance(&eta, &flat, Side::Lower);
        assert!((v - 0.7).abs() < 1e-12);
        assert!(e <= v);
        let (v, _) = boundary_distance(&eta, &flat, Side::Upper);
        assert!((v - 0.7).abs() < 1e-12);
        assert_eq!(
            boundary_distance(&eta, &BottomSpec::Infinite, Side::Lower).0,
            f64::INFINITY
        );
    }

    #[test]
    fn energy_values() {
        let g = Grid::periodic_1d(64).unwrap();
        let p = PhaseParams::one_phase(1.0, 1.0, 1.0, 0.0, BottomSpec::Infinite);
        assert!((energy(&Field::zeros(&g), &p) - 2.0 * PI).abs() < 1e-12);
        let a = 1e-2;
        let eta = Field::from_fn(&g, |x| a * x[0].cos()).unwrap();
        let e = energy(&eta, &p);
        assert!((e - 2.0 * PI * (1.0 + a * a / 4.0)).abs() < 1e-7);
        let mut p2 = p.clone();
        p2.sigma = 2.0;
        assert!((energy(&eta, &p2) - 2.0 * e).abs() < 1e-12);
    }
}
