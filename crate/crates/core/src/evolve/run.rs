use serde::Serialize;

use super::{step, Model, SchemeConfig, SimState};
use crate::error::Result;
use crate::geometry::{energy, separation, vertical_separation};
use crate::spectral::{tail_fraction, Field};
use crate::twophase::PhaseParams;

#[derive(Debug, Clone, Copy)]
pub struct MonitorConfig {
    /// Smallest admissible vertical distance to a rigid boundary.
    pub h_floor: f64,
    /// Trip when ||eta||_{H^s} exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// Trip when the top third of the resolved band carries more than this
    /// fraction of the peak coefficient amplitude.
    pub tail_threshold: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            h_floor: 1e-2,
            blowup_factor: 50.0,
            tail_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub initial: Field,
    pub params: PhaseParams,
    pub model: Model,
    pub scheme: SchemeConfig,
    pub t_end: f64,
    pub monitors: MonitorConfig,
    /// Accepted steps between diagnostics rows.
    pub diagnostics_every: usize,
    /// Accepted steps between stored snapshots; 0 keeps only the first
    /// and last state.
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub hs_norm: f64,
    pub l2_norm: f64,
    pub hs32_norm: f64,
    pub zs_norm: f64,
    pub dist_vertical: f64,
    pub dist_euclidean: f64,
    pub energy: f64,
    pub dt: f64,
    pub rhs_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonitorKind {
    Separation,
    Blowup,
    Resolution,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    Monitor {
        kind: MonitorKind,
        t: f64,
        value: f64,
        threshold: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<(f64, Field)>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub termination: Termination,
    pub steps: usize,
    pub rejected_steps: usize,
    pub final_state: SimState,
}

struct Recorder {
    s: f64,
    sup_hs: f64,
    integral: f64,
    last: Option<(f64, f64)>,
    rows: Vec<DiagnosticsRow>,
}

impl Recorder {
    fn record(&mut self, state: &SimState, dt: f64, rhs_norm: f64) {
        let eta = &state.eta;
        let hs = eta.sobolev_norm(self.s);
        let hs32 = eta.sobolev_norm(self.s + 1.5);
        self.sup_hs = self.sup_hs.max(hs);
        if let Some((t0, q0)) = self.last {
            self.integral += 0.5 * (state.t - t0) * (q0 + hs32 * hs32);
        }
        self.last = Some((state.t, hs32 * hs32));
        let (dv, de) = separation(eta, &state.params);
        self.rows.push(DiagnosticsRow {
            t: state.t,
            hs_norm: hs,
            l2_norm: eta.l2_norm(),
            hs32_norm: hs32,
            zs_norm: self.sup_hs + self.integral.sqrt(),
            dist_vertical: dv,
            dist_euclidean: de,
            energy: energy(eta, &state.params),
            dt,
            rhs_norm,
        });
    }
}

fn check_monitors(state: &SimState, m: &MonitorConfig, hs0: f64, s: f64) -> Option<Termination> {
    let eta = &state.eta;
    let tail = tail_fraction(eta);
    if tail > m.tail_threshold {
        return Some(Termination::Monitor {
            kind: MonitorKind::Resolution,
            t: state.t,
            value: tail,
            threshold: m.tail_threshold,
        });
    }
    let dv = vertical_separation(eta, &state.params);
    if dv < m.h_floor {
        return Some(Termination::Monitor {
            kind: MonitorKind::Separation,
            t: state.t,
            value: dv,
            threshold: m.h_floor,
        });
    }
    let hs = eta.sobolev_norm(s);
    if hs0 > 0.0 && hs > m.blowup_factor * hs0 {
        return Some(Termination::Monitor {
            kind: MonitorKind::Blowup,
            t: state.t,
            value: hs / hs0,
            threshold: m.blowup_factor,
        });
    }
    None
}

/// Integrates until `t_end` or until a monitor trips. Numerical failures
/// are returned as errors; monitor trips end the run normally with a
/// termination record.
pub fn run_simulation(spec: &SimulationSpec) -> Result<RunOutput> {
    let cfg = &spec.scheme;
    let mut state = SimState::new(
        spec.initial.clone(),
        spec.params.clone(),
        spec.model,
        cfg.dt,
    )?;
    let s = cfg.s;
    let hs0 = state.eta.sobolev_norm(s);
    let mut rec = Recorder {
        s,
        sup_hs: 0.0,
        integral: 0.0,
        last: None,
        rows: Vec::new(),
    };
    let mut snapshots = vec![(state.t, state.eta.clone())];
    let every = spec.diagnostics_every.max(1);

    if let Some(t) = check_monitors(&state, &spec.monitors, hs0, s) {
        rec.record(&state, 0.0, 0.0);
        return Ok(RunOutput {
            snapshots,
            diagnostics: rec.rows,
            termination: t,
            steps: 0,
            rejected_steps: 0,
            final_state: state,
        });
    }
    let r0 = state.rhs(cfg)?.l2_norm();
    rec.record(&state, 0.0, r0);

    let mut steps = 0;
    let mut rejected = 0;
    let mut termination = Termination::Completed;
    let t_end = spec.t_end;
    while state.t < t_end * (1.0 - 1e-12) {
        state.dt_next = state.dt_next.min(t_end - state.t);
        let (mut next, rep) = step(&state, cfg)?;
        steps += 1;
        rejected += rep.rejected;
        let last = next.t >= t_end * (1.0 - 1e-12);
        if last {
            next.t = t_end;
        }
        // a truncated final step must not shrink later proposals
        next.dt_next = next.dt_next.max(rep.dt.min(cfg.dt));
        state = next;
        let tripped = check_monitors(&state, &spec.monitors, hs0, s);
        if steps % every == 0 || last || tripped.is_some() {
            rec.record(&state, rep.dt, rep.rhs_norm);
        }
        let due = (spec.snapshot_every > 0 && steps % spec.snapshot_every == 0)
            || last
            || tripped.is_some();
        if due && snapshots.last().map(|s| s.0) != Some(state.t) {
            snapshots.push((state.t, state.eta.clone()));
        }
        if let Some(t) = tripped {
            termination = t;
            break;
        }
    }
    Ok(RunOutput {
        snapshots,
        diagnostics: rec.rows,
        termination,
        steps,
        rejected_steps: rejected,
        final_state: state,
    })
}
