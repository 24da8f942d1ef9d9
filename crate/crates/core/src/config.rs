//! Run configuration: TOML schema, defaults and cross-field validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dno::{BottomSpec, DnoMethod, EllipticConfig, SeriesConfig};
use crate::error::{Error, Result};
use crate::evolve::{Model, MonitorConfig, SchemeConfig, SchemeKind, SimulationSpec};
use crate::geometry::vertical_separation;
use crate::initial::{from_modes, random_hs, Mode, Normalization, SAMPLER_GAMMA};
use crate::spectral::{Field, Grid};
use crate::twophase::PhaseParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainSection {
    pub dim: usize,
    /// Defaults to 2 pi per axis.
    pub periods: Option<Vec<f64>>,
    pub resolution: Vec<usize>,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            dim: 1,
            periods: None,
            resolution: vec![128],
        }
    }
}

/// `"infinite"` or a positive depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Depth {
    Finite(f64),
    Named(String),
}

impl Default for Depth {
    fn default() -> Self {
        Depth::Named("infinite".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsSection {
    pub model: String,
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub surface_tension: f64,
    pub gravity: f64,
    pub depth_minus: Depth,
    pub depth_plus: Depth,
    /// Undulations added to a finite lower boundary, which then becomes
    /// y = -depth_minus + sum of modes.
    pub bottom_minus_modes: Vec<ModeEntry>,
    pub bottom_plus_modes: Vec<ModeEntry>,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection {
            model: "one-phase".into(),
            mu_minus: 1.0,
            mu_plus: 0.0,
            rho_minus: 1.0,
            rho_plus: 0.0,
            surface_tension: 1.0,
            gravity: 1.0,
            depth_minus: Depth::default(),
            depth_plus: Depth::default(),
            bottom_minus_modes: Vec::new(),
            bottom_plus_modes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialSection {
    /// "modes" or "random"
    pub kind: String,
    pub mean: f64,
    pub modes: Vec<ModeEntry>,
    /// Regularity of the random sample; defaults to numerics.s.
    pub s: Option<f64>,
    pub gamma: f64,
    pub seed: u64,
    /// Exactly one normalization for random data.
    pub amplitude: Option<f64>,
    pub max_slope: Option<f64>,
    pub sobolev_norm: Option<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: "modes".into(),
            mean: 0.0,
            modes: Vec::new(),
            s: None,
            gamma: SAMPLER_GAMMA,
            seed: 0,
            amplitude: None,
            max_slope: None,
            sobolev_norm: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericsSection {
    /// "imex" or "mollified"
    pub scheme: String,
    pub eps: Option<f64>,
    pub dt: f64,
    pub dt_min: f64,
    pub step_tol: f64,
    pub t_end: f64,
    /// "series" or "elliptic"
    pub dno: String,
    pub series_order: usize,
    pub elliptic_nz: usize,
    pub trace_tol: f64,
    pub s: f64,
    pub delta: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let d = SchemeConfig::default();
        NumericsSection {
            scheme: "imex".into(),
            eps: None,
            dt: d.dt,
            dt_min: d.dt_min,
            step_tol: d.step_tol,
            t_end: 0.1,
            dno: "series".into(),
            series_order: SeriesConfig::default().order,
            elliptic_nz: EllipticConfig::default().nz,
            trace_tol: d.trace_tol,
            s: d.s,
            delta: d.delta,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorSection {
    pub h_floor: f64,
    pub blowup_factor: f64,
    pub tail_threshold: f64,
}

impl Default for MonitorSection {
    fn default() -> Self {
        let m = MonitorConfig::default();
        MonitorSection {
            h_floor: m.h_floor,
            blowup_factor: m.blowup_factor,
            tail_threshold: m.tail_threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    pub diagnostics_every: usize,
    /// 0 keeps only the initial and final snapshot.
    pub snapshot_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: None,
            diagnostics_every: 1,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub physics: PhysicsSection,
    pub initial: InitialSection,
    pub numerics: NumericsSection,
    pub monitors: MonitorSection,
    pub output: OutputSection,
}

/// A validated configuration together with the objects it describes.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub grid: Grid,
    pub spec: SimulationSpec,
}

/// Parses and validates a TOML configuration. Every unknown key and every
/// violated constraint is reported, not just the first.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, |_| {})
}

/// Like [`parse_config`], with `adjust` applied (command-line overrides)
/// before validation.
pub fn parse_config_with(text: &str, adjust: impl FnOnce(&mut RunConfig)) -> Result<RunConfig> {
    let de = toml::Deserializer::new(text);
    let mut unknown = Vec::new();
    let mut cfg: RunConfig =
        serde_ignored::deserialize(de, |path| unknown.push(format!("unknown key `{path}`")))
            .map_err(|e| Error::Config(vec![e.to_string().trim().to_string()]))?;
    adjust(&mut cfg);
    let mut v = unknown;
    v.extend(cfg.violations());
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(v))
    }
}

fn depth_spec(d: &Depth, name: &str, v: &mut Vec<String>) -> Option<BottomSpec> {
    match d {
        Depth::Finite(h) if h.is_finite() && *h > 0.0 => Some(BottomSpec::Flat { depth: *h }),
        Depth::Named(s) if s == "infinite" => Some(BottomSpec::Infinite),
        other => {
            v.push(format!(
                "physics.{name} must be a positive number or \"infinite\", got {other:?}"
            ));
            None
        }
    }
}

fn to_modes(entries: &[ModeEntry], dim: usize, what: &str, v: &mut Vec<String>) -> Vec<Mode> {
    let mut out = Vec::new();
    for (i, m) in entries.iter().enumerate() {
        if m.k.len() != dim {
            v.push(format!(
                "{what}[{i}].k has {} components for a {dim}-d domain",
                m.k.len()
            ));
            continue;
        }
        if !(m.amplitude.is_finite() && m.phase.is_finite()) {
            v.push(format!("{what}[{i}] has a non-finite amplitude or phase"));
            continue;
        }
        let mut k = [0i64; 2];
        k[..dim].copy_from_slice(&m.k);
        out.push(Mode {
            k,
            amplitude: m.amplitude,
            phase: m.phase,
        });
    }
    out
}

impl RunConfig {
    pub fn model(&self) -> Option<Model> {
        Model::parse(&self.physics.model)
    }

    pub fn grid(&self) -> Result<Grid> {
        let d = &self.domain;
        let periods = d
            .periods
            .clone()
            .unwrap_or_else(|| vec![2.0 * std::f64::consts::PI; d.dim]);
        if periods.len() != d.dim || d.resolution.len() != d.dim {
            return Err(Error::InvalidGrid(format!(
                "domain.periods and domain.resolution need {} entries",
                d.dim
            )));
        }
        Grid::new(&periods, &d.resolution)
    }

    fn dno_method(&self) -> DnoMethod {
        if self.numerics.dno == "elliptic" {
            DnoMethod::Elliptic(EllipticConfig {
                nz: self.numerics.elliptic_nz,
                ..EllipticConfig::default()
            })
        } else {
            DnoMethod::Series(SeriesConfig {
                order: self.numerics.series_order,
                ..SeriesConfig::default()
            })
        }
    }

    pub fn scheme(&self) -> SchemeConfig {
        let n = &self.numerics;
        SchemeConfig {
            kind: match (n.scheme.as_str(), n.eps) {
                ("mollified", Some(eps)) => SchemeKind::Mollified { eps },
                _ => SchemeKind::Imex,
            },
            dt: n.dt,
            dt_min: n.dt_min,
            step_tol: n.step_tol,
            dno: self.dno_method(),
            trace_tol: n.trace_tol,
            s: n.s,
            delta: n.delta,
        }
    }

    /// All violated constraints, including those that need the initial
    /// interface (separation from the rigid boundaries).
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let dim = self.domain.dim;
        if !(1..=2).contains(&dim) {
            v.push(format!("domain.dim = {dim} must be 1 or 2"));
            return v;
        }
        let grid = match self.grid() {
            Ok(g) => Some(g),
            Err(e) => {
                v.push(format!("domain: {e}"));
                None
            }
        };
        let model = self.model();
        if model.is_none() {
            v.push(format!(
                "physics.model = {:?} must be one-phase, two-phase or leading-order",
                self.physics.model
            ));
        }
        let p = &self.physics;
        let lower = depth_spec(&p.depth_minus, "depth_minus", &mut v);
        let upper = depth_spec(&p.depth_plus, "depth_plus", &mut v);
        if model == Some(Model::TwoPhase) && !(p.mu_plus > 0.0) {
            v.push(format!(
                "physics.mu_plus = {} must be positive for two-phase flow",
                p.mu_plus
            ));
        }
        if model != Some(Model::TwoPhase) && (p.mu_plus != 0.0 || p.rho_plus != 0.0) {
            v.push("physics.mu_plus and rho_plus apply only to the two-phase model".into());
        }
        let n = &self.numerics;
        match n.scheme.as_str() {
            "imex" => {
                if n.eps.is_some() {
                    v.push("numerics.eps applies only to the mollified scheme".into());
                }
            }
            "mollified" => {
                if n.eps.is_none() {
                    v.push("numerics.eps is required for the mollified scheme".into());
                }
            }
            other => v.push(format!(
                "numerics.scheme = {other:?} must be imex or mollified"
            )),
        }
        if !matches!(n.dno.as_str(), "series" | "elliptic") {
            v.push(format!(
                "numerics.dno = {:?} must be series or elliptic",
                n.dno
            ));
        }
        if n.series_order == 0 {
            v.push("numerics.series_order must be at least 1".into());
        }
        if n.elliptic_nz < 5 {
            v.push("numerics.elliptic_nz must be at least 5".into());
        }
        if !(n.t_end.is_finite() && n.t_end > 0.0) {
            v.push(format!("numerics.t_end = {} must be positive", n.t_end));
        }
        if !(n.trace_tol > 0.0 && n.trace_tol < 1.0) {
            v.push("numerics.trace_tol must lie in (0, 1)".into());
        }
        v.extend(
            self.scheme()
                .violations(dim)
                .into_iter()
                .map(|m| format!("numerics: {m}")),
        );
        let m = &self.monitors;
        if !(m.h_floor > 0.0) {
            v.push("monitors.h_floor must be positive".into());
        }
        if !(m.blowup_factor > 1.0) {
            v.push("monitors.blowup_factor must exceed 1".into());
        }
        if !(m.tail_threshold > 0.0) {
            v.push("monitors.tail_threshold must be positive".into());
        }
        if self.output.diagnostics_every == 0 {
            v.push("output.diagnostics_every must be at least 1".into());
        }

        let (Some(grid), Some(lower), Some(upper), Some(model)) = (grid, lower, upper, model)
        else {
            return v;
        };
        let bm = to_modes(
            &p.bottom_minus_modes,
            dim,
            "physics.bottom_minus_modes",
            &mut v,
        );
        let bp = to_modes(
            &p.bottom_plus_modes,
            dim,
            "physics.bottom_plus_modes",
            &mut v,
        );
        let lower = match self.graph_bottom(&grid, lower, &bm, -1.0, "bottom_minus_modes", &mut v) {
            Some(b) => b,
            None => return v,
        };
        let upper = match self.graph_bottom(&grid, upper, &bp, 1.0, "bottom_plus_modes", &mut v) {
            Some(b) => b,
            None => return v,
        };
        let params = PhaseParams {
            mu_minus: p.mu_minus,
            mu_plus: if model == Model::TwoPhase {
                p.mu_plus
            } else {
                0.0
            },
            rho_minus: p.rho_minus,
            rho_plus: p.rho_plus,
            sigma: p.surface_tension,
            gravity: p.gravity,
            bottom_minus: lower,
            bottom_plus: upper,
        };
        v.extend(
            params
                .violations()
                .into_iter()
                .map(|m| format!("physics: {m}")),
        );
        if let Some(eta) = self.initial_field(&grid, &mut v) {
            let gap = vertical_separation(&eta, &params);
            if !(gap > 2.0 * m.h_floor) {
                v.push(format!(
                    "initial interface is {gap:.3e} from a rigid boundary; need more than 2 h_floor = {:.3e}",
                    2.0 * m.h_floor
                ));
            }
        }
        v
    }

    fn graph_bottom(
        &self,
        grid: &Grid,
        base: BottomSpec,
        modes: &[Mode],
        sign: f64,
        name: &str,
        v: &mut Vec<String>,
    ) -> Option<BottomSpec> {
        if modes.is_empty() {
            return Some(base);
        }
        let BottomSpec::Flat { depth } = base else {
            v.push(format!("physics.{name} needs a finite depth"));
            return None;
        };
        match from_modes(grid, sign * depth, modes) {
            Ok(surface) => Some(BottomSpec::Graph { surface }),
            Err(e) => {
                v.push(format!("physics.{name}: {e}"));
                None
            }
        }
    }

    fn initial_field(&self, grid: &Grid, v: &mut Vec<String>) -> Option<Field> {
        let ini = &self.initial;
        let dim = grid.dim();
        match ini.kind.as_str() {
            "modes" => {
                if ini.amplitude.is_some() || ini.max_slope.is_some() || ini.sobolev_norm.is_some()
                {
                    v.push("initial normalizations apply only to random data".into());
                }
                let modes = to_modes(&ini.modes, dim, "initial.modes", v);
                match from_modes(grid, ini.mean, &modes) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        v.push(format!("initial: {e}"));
                        None
                    }
                }
            }
            "random" => {
                if !ini.modes.is_empty() {
                    v.push("initial.modes applies only to mode-list data".into());
                }
                let norms: Vec<Normalization> = [
                    ini.amplitude.map(Normalization::Amplitude),
                    ini.max_slope.map(Normalization::MaxSlope),
                    ini.sobolev_norm.map(Normalization::Sobolev),
                ]
                .into_iter()
                .flatten()
                .collect();
                if norms.len() != 1 {
                    v.push("random initial data needs exactly one of amplitude, max_slope, sobolev_norm".into());
                    return None;
                }
                let s = ini.s.unwrap_or(self.numerics.s);
                match random_hs(grid, s, ini.gamma, ini.seed, norms[0]) {
                    Ok(f) => Some(f.map(|x| x + ini.mean).expect("shift of a finite field")),
                    Err(e) => {
                        v.push(format!("initial: {e}"));
                        None
                    }
                }
            }
            other => {
                v.push(format!("initial.kind = {other:?} must be modes or random"));
                None
            }
        }
    }

    /// Builds the simulation. Fails with every violation when invalid.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(Error::Config(v));
        }
        let grid = self.grid()?;
        let mut scratch = Vec::new();
        let p = &self.physics;
        let model = self.model().expect("validated");
        let dim = grid.dim();
        let lower = depth_spec(&p.depth_minus, "depth_minus", &mut scratch).expect("validated");
        let upper = depth_spec(&p.depth_plus, "depth_plus", &mut scratch).expect("validated");
        let bm = to_modes(&p.bottom_minus_modes, dim, "", &mut scratch);
        let bp = to_modes(&p.bottom_plus_modes, dim, "", &mut scratch);
        let lower = self
            .graph_bottom(&grid, lower, &bm, -1.0, "", &mut scratch)
            .expect("validated");
        let upper = self
            .graph_bottom(&grid, upper, &bp, 1.0, "", &mut scratch)
            .expect("validated");
        let initial = self.initial_field(&grid, &mut scratch).expect("validated");
        let params = PhaseParams {
            mu_minus: p.mu_minus,
            mu_plus: if model == Model::TwoPhase {
                p.mu_plus
            } else {
                0.0
            },
            rho_minus: p.rho_minus,
            rho_plus: p.rho_plus,
            sigma: p.surface_tension,
            gravity: p.gravity,
            bottom_minus: lower,
            bottom_plus: upper,
        };
        let m = &self.monitors;
        Ok(ResolvedRun {
            config: self.clone(),
            spec: SimulationSpec {
                initial,
                params,
                model,
                scheme: self.scheme(),
                t_end: self.numerics.t_end,
                monitors: MonitorConfig {
                    h_floor: m.h_floor,
                    blowup_factor: m.blowup_factor,
                    tail_threshold: m.tail_threshold,
                },
                diagnostics_every: self.output.diagnostics_every,
                snapshot_every: self.output.snapshot_every,
            },
            grid,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[initial]
modes = [{ k = [1], amplitude = 0.1 }]
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.domain.resolution, vec![128]);
        assert_eq!(c.numerics.s, 3.0);
        let r = c.resolve().unwrap();
        assert!((r.spec.initial.max_abs() - 0.1).abs() < 1e-15);
        assert!(matches!(r.spec.params.bottom_minus, BottomSpec::Infinite));
    }

    #[test]
    fn zero_surface_tension_is_rejected() {
        let text = format!("{MINIMAL}\n[physics]\nsurface_tension = 0.0\n");
        let Err(Error::Config(v)) = parse_config(&text) else {
            panic!("accepted sigma = 0");
        };
        assert!(v.iter().any(|m| m.contains("capillary")), "{v:?}");
    }

    #[test]
    fn critical_sobolev_index_is_rejected() {
        let text = format!("{MINIMAL}\n[numerics]\ns = 1.5\ndelta = 0.1\n");
        let Err(Error::Config(v)) = parse_config(&text) else {
            panic!("accepted s = 1 + d/2");
        };
        assert!(v.iter().any(|m| m.contains("must exceed 1 + d/2")), "{v:?}");
    }

    #[test]
    fn all_problems_are_listed() {
        let text = r#"
[domain]
resolutoin = [64]
[physics]
surface_tension = -1.0
depth_minus = 0.05
[initial]
modes = [{ k = [1], amplitude = 0.1 }]
[numerics]
dt = -1.0
bogus = 3
"#;
        let Err(Error::Config(v)) = parse_config(text) else {
            panic!("accepted an invalid config");
        };
        let has = |s: &str| v.iter().any(|m| m.contains(s));
        assert!(has("domain.resolutoin"), "{v:?}");
        assert!(has("numerics.bogus"), "{v:?}");
        assert!(has("capillary"), "{v:?}");
        assert!(has("dt = -1"), "{v:?}");
        assert!(has("rigid boundary"), "{v:?}");
    }

    #[test]
    fn random_initial_data() {
        let text = r#"
[domain]
resolution = [64]
[initial]
kind = "random"
seed = 3
max_slope = 0.1
"#;
        let r = parse_config(text).unwrap().resolve().unwrap();
        let slope = r.spec.initial.derivative(0).max_abs();
        assert!((slope - 0.1).abs() < 1e-12);
        let both = format!("{text}amplitude = 0.2\n");
        assert!(parse_config(&both).is_err());
    }

    #[test]
    fn graph_bottom_and_two_phase() {
        let text = r#"
[physics]
model = "two-phase"
mu_plus = 2.0
rho_plus = 0.5
depth_minus = 1.0
depth_plus = "infinite"
bottom_minus_modes = [{ k = [2], amplitude = 0.1 }]
[initial]
modes = [{ k = [1], amplitude = 0.1 }]
"#;
        let r = parse_config(text).unwrap().resolve().unwrap();
        match &r.spec.params.bottom_minus {
            BottomSpec::Graph { surface } => assert!((surface.mean() + 1.0).abs() < 1e-14),
            other => panic!("unexpected bottom {other:?}"),
        }
        assert_eq!(r.spec.model, Model::TwoPhase);
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let c = parse_config(MINIMAL).unwrap();
        let again = parse_config(&c.to_toml()).unwrap();
        assert_eq!(again.to_toml(), c.to_toml());
    }
}
