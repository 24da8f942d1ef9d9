//! Time integration of the interface equation.

mod experiments;
mod run;

pub use experiments::{
    dilate, mollified_cauchy, residual_smoothness_check, scaling_check, stability_experiment,
    stability_sweep, CauchyReport, ScalingReport, SmoothnessConfig, SmoothnessReport,
    SmoothnessSample, StabilityReport, StabilityRun,
};
pub use run::{
    run_simulation, DiagnosticsRow, MonitorConfig, MonitorKind, RunOutput, SimulationSpec,
    Termination,
};

use crate::dno::{dno_apply, BottomSpec, DnoMethod, Side};
use crate::error::{Error, Result};
use crate::spectral::{norm2, Field};
use crate::twophase::{solve_traces, PhaseParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    OnePhase,
    TwoPhase,
    /// d_t eta = (s/mu-) G-(eta) Laplacian(eta), the scale-invariant
    /// leading part of the one-phase equation.
    LeadingOrder,
}

impl Model {
    pub fn parse(name: &str) -> Option<Model> {
        match name {
            "one-phase" => Some(Model::OnePhase),
            "two-phase" => Some(Model::TwoPhase),
            "leading-order" => Some(Model::LeadingOrder),
            _ => None,
        }
    }
}

/// d_t eta = -(1/mu-) G-(eta)(s H(eta) + rho- g eta).
pub fn rhs_one_phase(eta: &Field, params: &PhaseParams, dno: &DnoMethod) -> Result<Field> {
    let k = params.interface_forcing(eta);
    let g = dno_apply(eta, &k, &params.bottom_minus, Side::Lower, dno)?.boundary_value;
    Ok(g.scale(-1.0 / params.mu_minus).without_mean())
}

/// d_t eta = -(1/mu-) G-(eta) f- with f- from the trace system.
pub fn rhs_two_phase(
    eta: &Field,
    params: &PhaseParams,
    dno: &DnoMethod,
    tol: f64,
) -> Result<Field> {
    let tr = solve_traces(eta, params, dno, tol)?;
    let g = dno_apply(eta, &tr.f_minus, &params.bottom_minus, Side::Lower, dno)?.boundary_value;
    Ok(g.scale(-1.0 / params.mu_minus).without_mean())
}

pub fn rhs_leading(eta: &Field, params: &PhaseParams, dno: &DnoMethod) -> Result<Field> {
    let lap = eta.laplacian();
    let g = dno_apply(eta, &lap, &params.bottom_minus, Side::Lower, dno)?.boundary_value;
    Ok(g.scale(params.sigma / params.mu_minus).without_mean())
}

pub fn rhs(
    eta: &Field,
    params: &PhaseParams,
    model: Model,
    dno: &DnoMethod,
    trace_tol: f64,
) -> Result<Field> {
    match model {
        Model::OnePhase => rhs_one_phase(eta, params, dno),
        Model::TwoPhase => rhs_two_phase(eta, params, dno, trace_tol),
        Model::LeadingOrder => rhs_leading(eta, params, dno),
    }
}

/// Decay rate r(k) >= 0 of the flat linearization.
pub fn linear_rate(params: &PhaseParams, model: Model, k: f64, eta_mean: f64) -> f64 {
    match model {
        Model::OnePhase | Model::TwoPhase => params.linear_rate(k, eta_mean),
        Model::LeadingOrder => {
            let t = match &params.bottom_minus {
                BottomSpec::Infinite => 1.0,
                BottomSpec::Flat { depth } => ((depth + eta_mean) * k).tanh(),
                BottomSpec::Graph { surface } => ((eta_mean - surface.mean()) * k).tanh(),
            };
            params.sigma / params.mu_minus * k.powi(3) * t
        }
    }
}

/// Viscosity in front of the principal part T_{lambda ell}.
pub fn principal_viscosity(params: &PhaseParams, model: Model) -> f64 {
    match model {
        Model::TwoPhase => params.mu_minus + params.mu_plus,
        _ => params.mu_minus,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    Imex,
    /// Sharp Fourier truncation J_eps at |k| <= 1/eps, explicit RK4.
    Mollified {
        eps: f64,
    },
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Base (and largest) step.
    pub dt: f64,
    pub dt_min: f64,
    /// Accept an IMEX step when the second-stage correction is below
    /// `step_tol` relative to ||eta||. Infinite disables adaptivity.
    pub step_tol: f64,
    pub dno: DnoMethod,
    pub trace_tol: f64,
    /// Sobolev index of the diagnostics.
    pub s: f64,
    pub delta: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            kind: SchemeKind::Imex,
            dt: 1e-3,
            dt_min: 1e-10,
            step_tol: 1e-3,
            dno: DnoMethod::default(),
            trace_tol: 1e-11,
            s: 3.0,
            delta: 0.4,
        }
    }
}

impl SchemeConfig {
    /// All violated constraints for a d-dimensional run.
    pub fn violations(&self, dim: usize) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            v.push(format!("dt = {} must be positive", self.dt));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt) {
            v.push(format!("dt_min = {} must lie in (0, dt]", self.dt_min));
        }
        if !(self.step_tol > 0.0) {
            v.push("step_tol must be positive".into());
        }
        let crit = 1.0 + dim as f64 / 2.0;
        if !(self.s > crit) {
            v.push(format!(
                "Sobolev index s = {} must exceed 1 + d/2 = {crit}",
                self.s
            ));
        }
        let dmax = (self.s - crit).min(0.5);
        if !(self.delta > 0.0 && self.delta <= 0.5 && self.delta < self.s - crit) {
            v.push(format!(
                "delta = {} must lie in (0, s - 1 - d/2) and not exceed 1/2 (bound here {dmax})",
                self.delta
            ));
        }
        if let SchemeKind::Mollified { eps } = self.kind {
            if !(eps.is_finite() && eps > 0.0) {
                v.push(format!("mollifier eps = {eps} must be positive"));
            }
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub eta: Field,
    pub params: PhaseParams,
    pub model: Model,
    /// Step proposed for the next advance.
    pub dt_next: f64,
}

impl SimState {
    pub fn new(eta: Field, params: PhaseParams, model: Model, dt: f64) -> Result<SimState> {
        params.validate()?;
        if model == Model::TwoPhase && params.is_one_phase() {
            return Err(Error::arg("two-phase model needs mu_plus > 0"));
        }
        Ok(SimState {
            t: 0.0,
            eta,
            params,
            model,
            dt_next: dt,
        })
    }

    pub fn rhs(&self, cfg: &SchemeConfig) -> Result<Field> {
        rhs(&self.eta, &self.params, self.model, &cfg.dno, cfg.trace_tol)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub dt: f64,
    pub rejected: usize,
    /// L^2 norm of the RHS at the start of the step.
    pub rhs_norm: f64,
    pub error_estimate: f64,
}

/// phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2.
pub fn phi12(z: f64) -> (f64, f64) {
    if z.abs() < 0.5 {
        // t runs through z^n / (n+1)!
        let (mut p1, mut p2, mut t) = (0.0, 0.0, 1.0);
        for n in 0..24 {
            p1 += t;
            p2 += t / (n + 2) as f64;
            t *= z / (n + 2) as f64;
        }
        (p1, p2)
    } else {
        let e = z.exp();
        ((e - 1.0) / z, (e - 1.0 - z) / (z * z))
    }
}

fn linear_symbol(state: &SimState) -> impl Fn(f64) -> f64 + '_ {
    let m = state.eta.mean();
    move |k: f64| -linear_rate(&state.params, state.model, k, m)
}

/// One exponential Runge-Kutta step of size h (no adaptivity). Returns the
/// new surface, the second-stage correction norm and the initial RHS norm.
fn etd2_step(state: &SimState, cfg: &SchemeConfig, h: f64) -> Result<(Field, f64, f64)> {
    let lin = linear_symbol(state);
    let u = &state.eta;
    let f0 = state.rhs(cfg)?;
    let rhs_norm = f0.l2_norm();
    let lu = u.apply_real_multiplier(|k| lin(norm2(k)))?;
    let n0 = &f0 - &lu;
    let a = {
        let eu = u.apply_real_multiplier(|k| (h * lin(norm2(k))).exp())?;
        let p = n0.apply_real_multiplier(|k| h * phi12(h * lin(norm2(k))).0)?;
        &eu + &p
    };
    let fa = rhs(&a, &state.params, state.model, &cfg.dno, cfg.trace_tol)?;
    let la = a.apply_real_multiplier(|k| lin(norm2(k)))?;
    let na = &fa - &la;
    let corr = (&na - &n0).apply_real_multiplier(|k| h * phi12(h * lin(norm2(k))).1)?;
    Ok((&a + &corr, corr.l2_norm(), rhs_norm))
}

/// Adaptive exponential-integrator step. The step halves until the
/// second-stage correction is small compared with the solution.
pub fn step_imex(state: &SimState, cfg: &SchemeConfig) -> Result<(SimState, StepReport)> {
    let mut h = state.dt_next.min(cfg.dt);
    let mut rejected = 0;
    loop {
        let attempt = etd2_step(state, cfg, h);
        match attempt {
            Ok((eta, err, rhs_norm)) => {
                let scale = state.eta.without_mean().l2_norm().max(f64::MIN_POSITIVE);
                if err <= cfg.step_tol * scale || err == 0.0 {
                    let grow = err <= 0.25 * cfg.step_tol * scale;
                    let next = if grow { (2.0 * h).min(cfg.dt) } else { h };
                    let new = SimState {
                        t: state.t + h,
                        eta,
                        params: state.params.clone(),
                        model: state.model,
                        dt_next: next,
                    };
                    return Ok((
                        new,
                        StepReport {
                            dt: h,
                            rejected,
                            rhs_norm,
                            error_estimate: err,
                        },
                    ));
                }
            }
            Err(e) if e.is_numerical() && rejected < 60 => {
                if rejected == 0 {
                    // a failing start state cannot be cured by smaller steps
                    state.rhs(cfg)?;
                }
            }
            Err(e) => return Err(e),
        }
        rejected += 1;
        h *= 0.5;
        if h < cfg.dt_min {
            return Err(Error::Stiffness {
                dt: h,
                dt_min: cfg.dt_min,
            });
        }
    }
}

/// Largest flat decay rate among modes kept by J_eps.
pub fn mollified_stiffness(state: &SimState, eps: f64) -> f64 {
    let g = state.eta.grid();
    let kcut = 1.0 / eps;
    let m = state.eta.mean();
    (0..g.len())
        .filter(|&i| g.is_resolved(i) && g.wavenumber(i) <= kcut)
        .map(|i| linear_rate(&state.params, state.model, g.wavenumber(i), m))
        .fold(0.0, f64::max)
}

/// Stability limit of classical RK4 on the negative real axis, with margin.
pub const RK4_STABILITY: f64 = 2.5;

/// One RK4 step of d_t eta = J_eps RHS(J_eps eta).
pub fn step_mollified(state: &SimState, cfg: &SchemeConfig) -> Result<(SimState, StepReport)> {
    let eps = match cfg.kind {
        SchemeKind::Mollified { eps } => eps,
        SchemeKind::Imex => return Err(Error::arg("step_mollified needs a mollified scheme")),
    };
    let h = state.dt_next.min(cfg.dt);
    let rate = mollified_stiffness(state, eps);
    if rate * h > RK4_STABILITY {
        return Err(Error::StepTooLarge {
            dt: h,
            suggested: RK4_STABILITY / rate,
        });
    }
    let kcut = 1.0 / eps;
    let f = |u: &Field| -> Result<Field> {
        let ju = u.truncated(kcut);
        Ok(rhs(&ju, &state.params, state.model, &cfg.dno, cfg.trace_tol)?.truncated(kcut))
    };
    let u = &state.eta;
    let k1 = f(u)?;
    let k2 = f(&u.axpy(0.5 * h, &k1))?;
    let k3 = f(&u.axpy(0.5 * h, &k2))?;
    let k4 = f(&u.axpy(h, &k3))?;
    let mut incr = &k1 + &k4;
    incr = incr.axpy(2.0, &k2).axpy(2.0, &k3);
    let eta = u.axpy(h / 6.0, &incr);
    Ok((
        SimState {
            t: state.t + h,
            eta,
            params: state.params.clone(),
            model: state.model,
            dt_next: state.dt_next,
        },
        StepReport {
            dt: h,
            rejected: 0,
            rhs_norm: k1.l2_norm(),
            error_estimate: 0.0,
        },
    ))
}

pub fn step(state: &SimState, cfg: &SchemeConfig) -> Result<(SimState, StepReport)> {
    match cfg.kind {
        SchemeKind::Imex => step_imex(state, cfg),
        SchemeKind::Mollified { .. } => step_mollified(state, cfg),
    }
}

/// Advances with `n` equal steps of size (t_end - t)/n, without
/// adaptivity, recording the state after every step.
pub fn integrate_fixed(
    state: &SimState,
    cfg: &SchemeConfig,
    t_end: f64,
    n: usize,
) -> Result<Vec<(f64, Field)>> {
    if n == 0 || !(t_end > state.t) {
        return Err(Error::arg("need a positive number of steps and t_end > t"));
    }
    let h = (t_end - state.t) / n as f64;
    let mut fixed = cfg.clone();
    fixed.dt = h;
    fixed.dt_min = h;
    fixed.step_tol = f64::INFINITY;
    let mut cur = SimState {
        dt_next: h,
        ..state.clone()
    };
    let mut out = vec![(cur.t, cur.eta.clone())];
    for i in 0..n {
        let (next, _) = step(&cur, &fixed)?;
        cur = next;
        // pin the clock to avoid drift from repeated addition
        cur.t = state.t + (i + 1) as f64 * h;
        out.push((cur.t, cur.eta.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
