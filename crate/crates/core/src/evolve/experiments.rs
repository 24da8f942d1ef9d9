use num_complex::Complex64;
use serde::Serialize;

use super::{
    integrate_fixed, principal_viscosity, rhs, Model, SchemeConfig, SchemeKind, SimState,
    RK4_STABILITY,
};
use crate::dno::BottomSpec;
use crate::error::{Error, Result};
use crate::fit::spectral_slope;
use crate::paradiff::{CutoffPair, ParaOp};
use crate::spectral::{tail_fraction, zs_norm, Field};
use crate::symbols::lambda_ell_symbol;
use crate::twophase::PhaseParams;

/// eta_lam(x) = eta(lam x) / lam, realized by moving mode m to lam m.
/// Fails when a nonzero mode would leave the dealiased band.
pub fn dilate(eta: &Field, lam: usize) -> Result<Field> {
    if lam == 0 {
        return Err(Error::arg("dilation factor must be a positive integer"));
    }
    if lam == 1 {
        return Ok(eta.clone());
    }
    let g = eta.grid();
    let c = eta.spectral();
    let peak = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for (i, ci) in c.iter().enumerate() {
        if ci.norm() <= 1e-15 * peak {
            continue;
        }
        let m = g.mode(i);
        let target = [m[0] * lam as i64, m[1] * lam as i64];
        match g.index_of_mode(target).filter(|&j| g.is_resolved(j)) {
            Some(j) => out[j] = ci / lam as f64,
            None => {
                return Err(Error::arg(format!(
                    "mode {:?} dilated by {lam} leaves the resolved band",
                    &m[..g.dim()]
                )))
            }
        }
    }
    Field::from_spectral(g, out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub lambda: usize,
    /// ||eta_lam(T/lam^3) - lam^{-1} eta(T, lam .)||_{L^2}
    pub discrepancy: f64,
    /// L^2 difference of the dilated run at n and 2n steps.
    pub self_convergence: f64,
    pub steps: usize,
}

impl ScalingReport {
    pub fn ratio(&self) -> f64 {
        if self.discrepancy == 0.0 {
            0.0
        } else {
            self.discrepancy / self.self_convergence
        }
    }
}

/// Checks the scaling symmetry of the leading-order model on an infinitely
/// deep layer with fixed-step integration.
pub fn scaling_check(
    eta0: &Field,
    params: &PhaseParams,
    lam: usize,
    t_end: f64,
    steps: usize,
    cfg: &SchemeConfig,
) -> Result<ScalingReport> {
    if !matches!(params.bottom_minus, BottomSpec::Infinite) {
        return Err(Error::arg("scaling check needs an infinitely deep layer"));
    }
    if lam == 0 {
        return Err(Error::arg("scaling factor must be a positive integer"));
    }
    let cfg = SchemeConfig {
        kind: SchemeKind::Imex,
        ..cfg.clone()
    };
    let run = |eta: &Field, t: f64, n: usize| -> Result<Field> {
        let st = SimState::new(
            eta.clone(),
            params.clone(),
            Model::LeadingOrder,
            t / n as f64,
        )?;
        let mut traj = integrate_fixed(&st, &cfg, t, n)?;
        Ok(traj.pop().expect("trajectory is nonempty").1)
    };
    let l3 = (lam as f64).powi(3);
    let coarse = run(eta0, t_end, steps)?;
    let scaled0 = dilate(eta0, lam)?;
    let fine = run(&scaled0, t_end / l3, steps)?;
    let fine2 = run(&scaled0, t_end / l3, 2 * steps)?;
    let expected = dilate(&coarse, lam)?;
    Ok(ScalingReport {
        lambda: lam,
        discrepancy: (&fine - &expected).l2_norm(),
        self_convergence: (&fine - &fine2).l2_norm(),
        steps,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRun {
    /// ||eta1(0) - eta2(0)||_{H^s}
    pub initial_distance: f64,
    /// (t, ||eta1 - eta2||_{Z^s(t)} / initial_distance) at each sample.
    pub ratios: Vec<(f64, f64)>,
    /// Largest pointwise difference over the trajectory.
    pub max_difference: f64,
}

impl StabilityRun {
    pub fn final_ratio(&self) -> Option<f64> {
        self.ratios.last().map(|r| r.1)
    }
}

fn trajectory(
    eta: &Field,
    params: &PhaseParams,
    model: Model,
    cfg: &SchemeConfig,
    t_end: f64,
    steps: usize,
) -> Result<Vec<(f64, Field)>> {
    let st = SimState::new(eta.clone(), params.clone(), model, t_end / steps as f64)?;
    integrate_fixed(&st, cfg, t_end, steps)
}

/// Evolves two data with the same fixed steps and reports the Lipschitz
/// ratio of the Z^s distance to the initial H^s distance. Identical data
/// give an empty ratio list and zero difference.
pub fn stability_experiment(
    eta10: &Field,
    eta20: &Field,
    params: &PhaseParams,
    model: Model,
    cfg: &SchemeConfig,
    t_end: f64,
    steps: usize,
) -> Result<StabilityRun> {
    eta10.check_grid(eta20)?;
    let (a, b) = std::thread::scope(|sc| {
        let h = sc.spawn(|| trajectory(eta20, params, model, cfg, t_end, steps));
        let a = trajectory(eta10, params, model, cfg, t_end, steps);
        (a, h.join().expect("stability run panicked"))
    });
    let (a, b) = (a?, b?);
    let diffs: Vec<(f64, Field)> = a.iter().zip(&b).map(|(x, y)| (x.0, &x.1 - &y.1)).collect();
    let max_difference = diffs.iter().map(|d| d.1.max_abs()).fold(0.0, f64::max);
    let d0 = diffs[0].1.sobolev_norm(cfg.s);
    let mut ratios = Vec::new();
    if d0 > 0.0 {
        for j in 1..diffs.len() {
            ratios.push((diffs[j].0, zs_norm(&diffs[..=j], cfg.s)? / d0));
        }
    }
    Ok(StabilityRun {
        initial_distance: d0,
        ratios,
        max_difference,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub scales: Vec<f64>,
    pub runs: Vec<StabilityRun>,
    /// (max - min) / min of the final ratios.
    pub spread: f64,
}

/// Runs `stability_experiment` for eta2 = eta1 + scale * direction.
#[allow(clippy::too_many_arguments)]
pub fn stability_sweep(
    eta10: &Field,
    direction: &Field,
    scales: &[f64],
    params: &PhaseParams,
    model: Model,
    cfg: &SchemeConfig,
    t_end: f64,
    steps: usize,
) -> Result<StabilityReport> {
    let mut runs = Vec::with_capacity(scales.len());
    for &sc in scales {
        let eta20 = eta10.axpy(sc, direction);
        runs.push(stability_experiment(
            eta10, &eta20, params, model, cfg, t_end, steps,
        )?);
    }
    let fin: Vec<f64> = runs.iter().filter_map(|r| r.final_ratio()).collect();
    let (lo, hi) = fin
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    let spread = if fin.len() == runs.len() && lo > 0.0 {
        (hi - lo) / lo
    } else {
        f64::NAN
    };
    Ok(StabilityReport {
        scales: scales.to_vec(),
        runs,
        spread,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyReport {
    pub eps: Vec<f64>,
    pub steps: usize,
    /// ||eta_eps_j - eta_eps_{j+1}||_{Z^s} for consecutive mollifiers.
    pub distances: Vec<f64>,
    pub decreasing: bool,
    /// ||eta_eps_min - eta_imex||_{Z^s}
    pub imex_distance: f64,
    /// Geometric estimate of the distance from the finest mollified run to
    /// its limit.
    pub cauchy_tail: f64,
    /// Z^s distance between n and 2n steps, for each scheme.
    pub imex_time_error: f64,
    pub mollified_time_error: f64,
    pub tolerance: f64,
    pub agrees: bool,
}

fn zs_distance(a: &[(f64, Field)], b: &[(f64, Field)], s: f64) -> Result<f64> {
    let d: Vec<(f64, Field)> = a.iter().zip(b).map(|(x, y)| (x.0, &x.1 - &y.1)).collect();
    zs_norm(&d, s)
}

/// Solves the mollified problem for eps0, eps0/2, ... (`levels` values)
/// and an IMEX reference, all on the same time samples. The step count is
/// raised until RK4 is stable for the finest mollifier.
#[allow(clippy::too_many_arguments)]
pub fn mollified_cauchy(
    eta0: &Field,
    params: &PhaseParams,
    model: Model,
    cfg: &SchemeConfig,
    eps0: f64,
    levels: usize,
    t_end: f64,
    min_steps: usize,
) -> Result<CauchyReport> {
    if levels < 3 {
        return Err(Error::arg("need at least three mollifier levels"));
    }
    let eps: Vec<f64> = (0..levels).map(|j| eps0 / 2f64.powi(j as i32)).collect();
    let probe = SimState::new(eta0.clone(), params.clone(), model, cfg.dt)?;
    let stiff = super::mollified_stiffness(&probe, *eps.last().expect("levels >= 3"));
    let needed = (t_end * stiff / (0.8 * RK4_STABILITY)).ceil() as usize;
    let steps = min_steps.max(needed);
    let moll = |e: f64, n: usize| {
        let c = SchemeConfig {
            kind: SchemeKind::Mollified { eps: e },
            ..cfg.clone()
        };
        trajectory(eta0, params, model, &c, t_end, n)
    };
    let imex_cfg = SchemeConfig {
        kind: SchemeKind::Imex,
        ..cfg.clone()
    };
    let runs: Vec<Vec<(f64, Field)>> =
        eps.iter().map(|&e| moll(e, steps)).collect::<Result<_>>()?;
    let mut distances = Vec::new();
    for w in runs.windows(2) {
        distances.push(zs_distance(&w[0], &w[1], cfg.s)?);
    }
    let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let finest = runs.last().expect("levels >= 3");
    let imex = trajectory(eta0, params, model, &imex_cfg, t_end, steps)?;
    let imex_distance = zs_distance(finest, &imex, cfg.s)?;

    // time errors: difference to the same scheme at 2n steps
    let every_other =
        |v: &[(f64, Field)]| -> Vec<(f64, Field)> { v.iter().step_by(2).cloned().collect() };
    let imex_fine = trajectory(eta0, params, model, &imex_cfg, t_end, 2 * steps)?;
    let imex_time_error = zs_distance(&imex, &every_other(&imex_fine), cfg.s)?;
    let moll_fine = moll(*eps.last().expect("levels >= 3"), 2 * steps)?;
    let mollified_time_error = zs_distance(finest, &every_other(&moll_fine), cfg.s)?;

    let n = distances.len();
    let r = distances[n - 1] / distances[n - 2];
    let cauchy_tail = if r < 1.0 {
        distances[n - 1] * r / (1.0 - r)
    } else {
        f64::INFINITY
    };
    let tolerance = 2.0 * (cauchy_tail + imex_time_error + mollified_time_error);
    Ok(CauchyReport {
        eps,
        steps,
        decreasing,
        agrees: imex_distance <= tolerance,
        distances,
        imex_distance,
        cauchy_tail,
        imex_time_error,
        mollified_time_error,
        tolerance,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SmoothnessConfig {
    pub delta: f64,
    /// Lower end of the slope-fit window.
    pub k_lo: f64,
    /// Upper end as a fraction of the dealiasing wavenumber.
    pub k_hi_fraction: f64,
    pub bins: usize,
    /// Samples whose spectral tail exceeds this are inconclusive.
    pub tail_threshold: f64,
    /// Largest admissible difference between the slopes of eta on the
    /// lower and upper half of the window. The fit presumes algebraic
    /// decay; a spectrum bent by parabolic smoothing is inconclusive.
    pub curvature_tol: f64,
    pub cutoffs: CutoffPair,
}

impl Default for SmoothnessConfig {
    fn default() -> Self {
        SmoothnessConfig {
            delta: 0.4,
            k_lo: 4.0,
            k_hi_fraction: 0.9,
            bins: 8,
            tail_threshold: 1e-3,
            curvature_tol: 1.0,
            cutoffs: CutoffPair::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessSample {
    pub t: f64,
    /// Spectral slope of g and of the principal term; `None` when the
    /// window holds too few nonzero shells.
    pub slope_g: Option<f64>,
    pub slope_principal: Option<f64>,
    /// slope_principal - slope_g; positive when g is smoother.
    pub gap: Option<f64>,
    /// ||g||_{L^2} / ||(s/mu) T_{lambda ell} eta||_{L^2}
    pub relative_size: f64,
    pub tail: f64,
    /// Upper-half minus lower-half slope of eta's spectrum.
    pub curvature: Option<f64>,
    pub conclusive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    pub delta: f64,
    pub samples: Vec<SmoothnessSample>,
    /// Smallest gap over the conclusive samples.
    pub min_gap: Option<f64>,
}

impl SmoothnessReport {
    pub fn conclusive(&self) -> bool {
        self.min_gap.is_some()
    }

    /// The gap must reach `fraction * delta` on every conclusive sample.
    pub fn passes(&self, fraction: f64) -> Option<bool> {
        self.min_gap.map(|g| g >= fraction * self.delta)
    }
}

/// Splits the RHS along a trajectory as -(s/mu) T_{lambda ell} eta + g and
/// compares the spectral decay of g with that of the principal term.
pub fn residual_smoothness_check(
    trajectory: &[(f64, Field)],
    params: &PhaseParams,
    model: Model,
    scheme: &SchemeConfig,
    cfg: &SmoothnessConfig,
) -> Result<SmoothnessReport> {
    let coef = params.sigma / principal_viscosity(params, model);
    let mut samples = Vec::with_capacity(trajectory.len());
    for (t, eta) in trajectory {
        let k_hi = cfg.k_hi_fraction * eta.grid().dealias_wavenumber();
        let tail = tail_fraction(eta);
        let dt_eta = rhs(eta, params, model, &scheme.dno, scheme.trace_tol)?;
        let principal = ParaOp::new(lambda_ell_symbol(eta), cfg.cutoffs)
            .apply(eta)?
            .scale(coef);
        let g = &dt_eta + &principal;
        let pn = principal.l2_norm();
        let slope_g = spectral_slope(&g, cfg.k_lo, k_hi, cfg.bins);
        let slope_principal = spectral_slope(&principal, cfg.k_lo, k_hi, cfg.bins);
        let gap = slope_g.zip(slope_principal).map(|(a, b)| b - a);
        let mid = (cfg.k_lo * k_hi).sqrt();
        let half = (cfg.bins / 2).max(3);
        let curvature = spectral_slope(eta, mid, k_hi, half)
            .zip(spectral_slope(eta, cfg.k_lo, mid, half))
            .map(|(up, lo)| up - lo);
        let algebraic = curvature.is_some_and(|c| c.abs() <= cfg.curvature_tol);
        samples.push(SmoothnessSample {
            t: *t,
            slope_g,
            slope_principal,
            gap,
            relative_size: if pn > 0.0 { g.l2_norm() / pn } else { 0.0 },
            tail,
            curvature,
            conclusive: gap.is_some() && algebraic && tail <= cfg.tail_threshold,
        });
    }
    let min_gap = samples
        .iter()
        .filter(|s| s.conclusive)
        .filter_map(|s| s.gap)
        .reduce(f64::min);
    Ok(SmoothnessReport {
        delta: cfg.delta,
        samples,
        min_gap,
    })
}
