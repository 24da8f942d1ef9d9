//! Physical parameters and the interface trace system
//!
//!   f- - f+ = s H(eta) + [rho] g eta,
//!   (1/mu+) G+(eta) f+ - (1/mu-) G-(eta) f- = 0.

use crate::dno::{dno_apply, BottomSpec, DnoMethod, Side};
use crate::error::{Error, Result};
use crate::geometry::mean_curvature;
use crate::krylov::{gmres, GmresConfig};
use crate::spectral::{norm2, Field};

#[derive(Debug, Clone)]
pub struct PhaseParams {
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    /// Surface tension coefficient.
    pub sigma: f64,
    pub gravity: f64,
    pub bottom_minus: BottomSpec,
    pub bottom_plus: BottomSpec,
}

impl PhaseParams {
    /// Single fluid below a free surface (mu+ = rho+ = 0).
    pub fn one_phase(
        mu: f64,
        rho: f64,
        sigma: f64,
        gravity: f64,
        bottom: BottomSpec,
    ) -> PhaseParams {
        PhaseParams {
            mu_minus: mu,
            mu_plus: 0.0,
            rho_minus: rho,
            rho_plus: 0.0,
            sigma,
            gravity,
            bottom_minus: bottom,
            bottom_plus: BottomSpec::Infinite,
        }
    }

    pub fn is_one_phase(&self) -> bool {
        self.mu_plus == 0.0 && self.rho_plus == 0.0
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !pos(self.mu_minus) {
            v.push(format!("mu_minus = {} must be positive", self.mu_minus));
        }
        if !self.is_one_phase() && !pos(self.mu_plus) {
            v.push(format!(
                "mu_plus = {} must be positive for two-phase flow",
                self.mu_plus
            ));
        }
        if !nonneg(self.rho_minus) || !nonneg(self.rho_plus) {
            v.push("densities must be nonnegative".into());
        }
        if !pos(self.sigma) {
            v.push(format!(
                "surface tension sigma = {} must be positive: only the capillary regime is supported",
                self.sigma
            ));
        }
        if !nonneg(self.gravity) {
            v.push(format!("gravity = {} must be nonnegative", self.gravity));
        }
        for (name, b) in [
            ("bottom_minus", &self.bottom_minus),
            ("bottom_plus", &self.bottom_plus),
        ] {
            if let Err(e) = b.validate() {
                v.push(format!("{name}: {e}"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }

    /// rho- for one-phase flow, rho- - rho+ otherwise.
    pub fn density_jump(&self) -> f64 {
        self.rho_minus - self.rho_plus
    }

    /// mu- (one-phase) or mu+ + mu- (two-phase).
    pub fn effective_viscosity(&self) -> f64 {
        if self.is_one_phase() {
            self.mu_minus
        } else {
            self.mu_minus + self.mu_plus
        }
    }

    fn depth_factor(bottom: &BottomSpec, eta_mean: f64, side: Side, k: f64) -> f64 {
        let g = match bottom {
            BottomSpec::Infinite => return 1.0,
            BottomSpec::Flat { depth } => match side {
                Side::Lower => depth + eta_mean,
                Side::Upper => depth - eta_mean,
            },
            BottomSpec::Graph { surface } => match side {
                Side::Lower => eta_mean - surface.mean(),
                Side::Upper => surface.mean() - eta_mean,
            },
        };
        (g.max(0.0) * k).tanh()
    }

    /// Decay rate r(k) of the flat linearized flow, eta_k ~ exp(-r t),
    /// about a flat interface at height `eta_mean`.
    pub fn linear_rate(&self, k: f64, eta_mean: f64) -> f64 {
        let tm = Self::depth_factor(&self.bottom_minus, eta_mean, Side::Lower, k);
        let drive = self.sigma * k * k + self.density_jump() * self.gravity;
        if self.is_one_phase() {
            return k * tm * drive / self.mu_minus;
        }
        let tp = Self::depth_factor(&self.bottom_plus, eta_mean, Side::Upper, k);
        let den = self.mu_minus * tp + self.mu_plus * tm;
        if den == 0.0 {
            return 0.0;
        }
        k * tp * tm * drive / den
    }

    /// Pressure jump s H(eta) + [rho] g eta, without its mean.
    pub fn interface_forcing(&self, eta: &Field) -> Field {
        let h = mean_curvature(eta);
        h.scale(self.sigma)
            .axpy(self.density_jump() * self.gravity, eta)
            .without_mean()
    }
}

#[derive(Debug, Clone)]
pub struct TraceSolution {
    pub f_minus: Field,
    pub f_plus: Field,
    pub iterations: usize,
    /// H^{-1/2} norm of the flux-balance residual.
    pub residual_h_minus_half: f64,
    pub residual_l2: f64,
    /// L^2 norm of f- - f+ - k (zero up to rounding by construction).
    pub jump_residual: f64,
    pub history: Vec<f64>,
}

/// Solves for zero-mean traces f+-. One-phase parameters give f- = k.
pub fn solve_traces(
    eta: &Field,
    params: &PhaseParams,
    method: &DnoMethod,
    tol: f64,
) -> Result<TraceSolution> {
    solve_traces_with_forcing(eta, &params.interface_forcing(eta), params, method, tol)
}

/// Trace solve for a prescribed jump f- - f+ = k.
pub fn solve_traces_with_forcing(
    eta: &Field,
    k: &Field,
    params: &PhaseParams,
    method: &DnoMethod,
    tol: f64,
) -> Result<TraceSolution> {
    params.validate()?;
    eta.check_grid(k)?;
    let k = k.without_mean();
    if params.is_one_phase() {
        return Ok(TraceSolution {
            f_plus: Field::zeros(eta.grid()),
            f_minus: k,
            iterations: 0,
            residual_h_minus_half: 0.0,
            residual_l2: 0.0,
            jump_residual: 0.0,
            history: vec![],
        });
    }
    let grid = eta.grid();
    let (mp, mm) = (params.mu_plus, params.mu_minus);
    let gp = |f: &Field| -> Result<Field> {
        Ok(dno_apply(eta, f, &params.bottom_plus, Side::Upper, method)?.boundary_value)
    };
    let gm = |f: &Field| -> Result<Field> {
        Ok(dno_apply(eta, f, &params.bottom_minus, Side::Lower, method)?.boundary_value)
    };
    let op = |f: &Field| -> Result<Field> {
        let f = f.without_mean();
        Ok(gp(&f)?
            .scale(1.0 / mp)
            .axpy(-1.0 / mm, &gm(&f)?)
            .without_mean())
    };
    let rhs = gp(&k)?.scale(1.0 / mp).without_mean();

    let m = eta.mean();
    let pb = params.clone();
    let symbol = move |kk: f64| {
        let tp = PhaseParams::depth_factor(&pb.bottom_plus, m, Side::Upper, kk);
        let tm = PhaseParams::depth_factor(&pb.bottom_minus, m, Side::Lower, kk);
        -kk * tp / mp - kk * tm / mm
    };
    let cfg = GmresConfig {
        tol,
        max_iter: 200,
        restart: 50,
    };
    let outcome = gmres(
        |x: &[f64]| Ok(op(&Field::new(grid, x.to_vec())?)?.into_values()),
        |x: &[f64]| {
            let v = Field::new(grid, x.to_vec())?;
            Ok(v.apply_real_multiplier(|q| {
                let p = symbol(norm2(q));
                if p == 0.0 {
                    0.0
                } else {
                    1.0 / p
                }
            })?
            .into_values())
        },
        rhs.values(),
        None,
        &cfg,
    )?
    .into_result("interface trace solve")?;

    let f_minus = Field::new(grid, outcome.x.clone())?.without_mean();
    let f_plus = (&f_minus - &k).without_mean();
    let r = &rhs - &op(&f_minus)?;
    let jump = (&(&f_minus - &f_plus) - &k).l2_norm();
    Ok(TraceSolution {
        residual_h_minus_half: r.sobolev_norm(-0.5),
        residual_l2: r.l2_norm(),
        jump_residual: jump,
        iterations: outcome.iterations,
        history: outcome.history,
        f_minus,
        f_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn two_phase(mu_plus: f64, mu_minus: f64) -> PhaseParams {
        PhaseParams {
            mu_minus,
            mu_plus,
            rho_minus: 0.0,
            rho_plus: 0.0,
            sigma: 1.0,
            gravity: 0.0,
            bottom_minus: BottomSpec::Infinite,
            bottom_plus: BottomSpec::Infinite,
        }
    }

    #[test]
    fn parameter_validation_collects_everything() {
        let mut p = two_phase(-1.0, 0.0);
        p.sigma = 0.0;
        let v = p.violations();
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v.iter().any(|m| m.contains("surface tension")));
    }

    #[test]
    fn flat_rates() {
        let one = PhaseParams::one_phase(1.0, 1.0, 1.0, 1.0, BottomSpec::Infinite);
        assert!((one.linear_rate(2.0, 0.0) - 10.0).abs() < 1e-14);
        let two = two_phase(1.0, 3.0);
        assert!((two.linear_rate(2.0, 0.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn flat_traces_split_by_viscosity() {
        let g = Grid::periodic_1d(32).unwrap();
        let eta = Field::zeros(&g);
        let k = Field::from_fn(&g, |x| x[0].cos()).unwrap();
        let s =
            solve_traces_with_forcing(&eta, &k, &two_phase(1.0, 3.0), &DnoMethod::default(), 1e-12)
                .unwrap();
        assert!((&s.f_minus - &k.scale(0.75)).max_abs() < 1e-10);
        assert!((&s.f_plus + &k.scale(0.25)).max_abs() < 1e-10);
        let zero = solve_traces(&eta, &two_phase(1.0, 1.0), &DnoMethod::default(), 1e-12).unwrap();
        assert_eq!(zero.f_minus.max_abs(), 0.0);
    }

    #[test]
    fn one_phase_returns_forcing() {
        let g = Grid::periodic_1d(32).unwrap();
        let p = PhaseParams::one_phase(1.0, 1.0, 1.0, 1.0, BottomSpec::Infinite);
        let eta = Field::from_fn(&g, |x| 0.1 * x[0].cos()).unwrap();
        let s = solve_traces(&eta, &p, &DnoMethod::default(), 1e-10).unwrap();
        assert!((&s.f_minus - &p.interface_forcing(&eta)).max_abs() < 1e-15);
    }

    #[test]
    fn curved_interface_converges() {
        let g = Grid::periodic_1d(64).unwrap();
        let p = two_phase(1.0, 3.0);
        let eta = Field::from_fn(&g, |x| 0.05 * x[0].cos()).unwrap();
        let tol = 1e-10;
        let s = solve_traces(&eta, &p, &DnoMethod::default(), tol).unwrap();
        let rhs_scale = s.f_minus.l2_norm();
        assert!(s.residual_l2 <= 10.0 * tol * rhs_scale.max(1.0));
        assert!(s.residual_h_minus_half <= s.residual_l2);
        assert!(s.jump_residual < 1e-13);
        let s10 = solve_traces(&eta, &p, &DnoMethod::default(), 10.0 * tol).unwrap();
        assert!((&s.f_minus - &s10.f_minus).l2_norm() <= 10.0 * 10.0 * tol);
    }
}
