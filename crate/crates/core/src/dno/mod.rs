//! Dirichlet-Neumann operators G-(eta) (fluid below the interface) and
//! G+(eta) (fluid above), by operator expansion and by a mapped-grid
//! elliptic solve.
//!
//! Convention: G(eta) f = sqrt(1+|grad eta|^2) d phi / dn with n the upward
//! normal, so G-(0) = |D| tanh(h|D|) and G+(0) = -|D| tanh(h|D|).

mod elliptic;
mod series;
mod velocity;

pub use elliptic::{EllipticConfig, Grading, InteriorSolution, MappedStrip};
pub use series::SeriesConfig;
pub use velocity::{reconstruct_velocity, VelocityField};

use crate::error::{Error, Result};
use crate::paradiff::{fit_defects, probe, CutoffPair, OrderFit, ParaOp, ProbeSample};
use crate::spectral::{norm2, Field};
use crate::symbols::lambda_symbol;

/// Rigid boundary closing a fluid layer. For the lower fluid a flat bottom
/// sits at y = -depth and a graph at y = b(x); for the upper fluid a flat
/// lid sits at y = +depth and a graph at y = b(x).
#[derive(Debug, Clone)]
pub enum BottomSpec {
    Infinite,
    Flat { depth: f64 },
    Graph { surface: Field },
}

impl BottomSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BottomSpec::Flat { depth } if !(depth.is_finite() && *depth > 0.0) => {
                Err(Error::arg(format!("flat depth {depth} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Mirror image under y -> -y.
    pub fn reflected(&self) -> BottomSpec {
        match self {
            BottomSpec::Graph { surface } => BottomSpec::Graph {
                surface: surface.scale(-1.0),
            },
            other => other.clone(),
        }
    }

    /// Depth used by the flat symbols: h for flat boundaries, the mean
    /// layer thickness for graphs, `None` for infinite depth.
    pub fn effective_depth(&self, eta: &Field, side: Side) -> Option<f64> {
        match self {
            BottomSpec::Infinite => None,
            BottomSpec::Flat { depth } => Some(*depth),
            BottomSpec::Graph { surface } => {
                let gap = surface.mean() - eta.mean();
                Some(match side {
                    Side::Lower => -gap,
                    Side::Upper => gap,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy)]
pub enum DnoMethod {
    Series(SeriesConfig),
    Elliptic(EllipticConfig),
}

impl Default for DnoMethod {
    fn default() -> Self {
        DnoMethod::Series(SeriesConfig::default())
    }
}

#[derive(Debug, Clone)]
pub enum MethodReport {
    Series {
        order: usize,
        term_norms: Vec<f64>,
    },
    Elliptic {
        levels: usize,
        iterations: usize,
        residual_history: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct DnoResult {
    pub boundary_value: Field,
    pub interior: Option<InteriorSolution>,
    pub method: MethodReport,
    /// Last series term norm, or the final relative residual of the
    /// linear solve.
    pub residual_norm: f64,
    pub side: Side,
}

/// Symbol of G(0) as a function of |xi|.
pub fn dno_flat_multiplier(bottom: &BottomSpec, side: Side) -> Result<impl Fn(f64) -> f64> {
    bottom.validate()?;
    let depth = match bottom {
        BottomSpec::Infinite => None,
        BottomSpec::Flat { depth } => Some(*depth),
        BottomSpec::Graph { .. } => {
            return Err(Error::arg(
                "no closed-form flat multiplier for a graph bottom",
            ))
        }
    };
    let sign = match side {
        Side::Lower => 1.0,
        Side::Upper => -1.0,
    };
    Ok(move |k: f64| sign * k * depth.map_or(1.0, |h| (h * k).tanh()))
}

fn lower_bottom_field(eta: &Field, bottom: &BottomSpec, cfg: &EllipticConfig) -> Field {
    match bottom {
        BottomSpec::Infinite => {
            let lmax = eta.grid().periods().iter().copied().fold(0.0, f64::max);
            Field::constant(
                eta.grid(),
                eta.min().min(0.0) - cfg.truncation_periods * lmax,
            )
        }
        BottomSpec::Flat { depth } => Field::constant(eta.grid(), -depth),
        BottomSpec::Graph { surface } => surface.clone(),
    }
}

fn lower_dn(eta: &Field, f: &Field, bottom: &BottomSpec, method: &DnoMethod) -> Result<DnoResult> {
    bottom.validate()?;
    eta.check_grid(f)?;
    match method {
        DnoMethod::Series(cfg) => {
            let depth = match bottom {
                BottomSpec::Infinite => None,
                BottomSpec::Flat { depth } => {
                    let sep = eta.min() + depth;
                    if sep <= 0.0 {
                        return Err(Error::Geometry {
                            min_separation: sep,
                        });
                    }
                    Some(*depth)
                }
                BottomSpec::Graph { .. } => {
                    return Err(Error::arg(
                        "the series method supports flat and infinite depth only; use the elliptic method",
                    ))
                }
            };
            let (value, norms) = series::series_dn(eta, f, depth, cfg)?;
            Ok(DnoResult {
                boundary_value: value,
                interior: None,
                residual_norm: *norms.last().unwrap_or(&0.0),
                method: MethodReport::Series {
                    order: cfg.order,
                    term_norms: norms,
                },
                side: Side::Lower,
            })
        }
        DnoMethod::Elliptic(cfg) => {
            if let BottomSpec::Graph { surface } = bottom {
                eta.check_grid(surface)?;
            }
            let b = lower_bottom_field(eta, bottom, cfg);
            let grading = cfg.grading.unwrap_or(match bottom {
                BottomSpec::Infinite => Grading::Exponential { beta: 6.0 },
                _ => Grading::Uniform,
            });
            let out = elliptic::elliptic_dn(eta, f, &b, grading, cfg)?;
            Ok(DnoResult {
                boundary_value: out.value,
                residual_norm: out.outcome.residual(),
                method: MethodReport::Elliptic {
                    levels: cfg.nz,
                    iterations: out.outcome.iterations,
                    residual_history: out.outcome.history,
                },
                interior: Some(out.interior),
                side: Side::Lower,
            })
        }
    }
}

/// G-(eta) f or G+(eta) f. The upper operator is evaluated through the
/// reflection G+(eta; b) f = -G-(-eta; -b) f.
pub fn dno_apply(
    eta: &Field,
    f: &Field,
    bottom: &BottomSpec,
    side: Side,
    method: &DnoMethod,
) -> Result<DnoResult> {
    match side {
        Side::Lower => lower_dn(eta, f, bottom, method),
        Side::Upper => {
            let mut r = lower_dn(&eta.scale(-1.0), f, &bottom.reflected(), method)?;
            r.boundary_value = r.boundary_value.scale(-1.0);
            if let Some(int) = r.interior.as_mut() {
                int.reflected = true;
            }
            r.side = Side::Upper;
            Ok(r)
        }
    }
}

/// Shorthand for the lower operator's boundary value.
pub fn dirichlet_neumann(
    eta: &Field,
    f: &Field,
    bottom: &BottomSpec,
    method: &DnoMethod,
) -> Result<Field> {
    Ok(lower_dn(eta, f, bottom, method)?.boundary_value)
}

pub fn dno_series(eta: &Field, f: &Field, order: usize, bottom: &BottomSpec) -> Result<DnoResult> {
    let cfg = SeriesConfig {
        order,
        ..Default::default()
    };
    lower_dn(eta, f, bottom, &DnoMethod::Series(cfg))
}

pub fn dno_elliptic(eta: &Field, f: &Field, bottom: &BottomSpec, nz: usize) -> Result<DnoResult> {
    let cfg = EllipticConfig {
        nz,
        ..Default::default()
    };
    lower_dn(eta, f, bottom, &DnoMethod::Elliptic(cfg))
}

/// Growth exponent in k of R-(eta) e_k = G-(eta) e_k - T_lambda e_k.
pub fn dno_remainder_order(
    eta: &Field,
    bottom: &BottomSpec,
    probes: &[i64],
    method: &DnoMethod,
    cutoffs: CutoffPair,
) -> Result<OrderFit> {
    if probes.len() < 3 {
        return Err(Error::arg(
            "an order fit needs at least three probe frequencies",
        ));
    }
    let g = eta.grid();
    let kd = g.dealias_wavenumber();
    let tl = ParaOp::new(lambda_symbol(eta), cutoffs);
    let mut samples = Vec::new();
    for &k in probes {
        let kk = 2.0 * std::f64::consts::PI * k as f64 / g.periods()[0];
        if k <= 0 || kk > kd {
            return Err(Error::arg(format!("probe {k} outside the dealiased band")));
        }
        let u = probe(g, k)?;
        let gu = dirichlet_neumann(eta, &u, bottom, method)?;
        let tu = tl.apply(&u)?;
        samples.push(ProbeSample {
            k,
            defect: (&gu - &tu).l2_norm(),
            reference: tu.l2_norm(),
            used: true,
        });
    }
    fit_defects(samples)
}

#[derive(Debug, Clone, Copy)]
pub struct ContractionSample {
    /// ||G(eta1) f - G(eta2) f||_{H^{s-3/2}}
    pub numerator: f64,
    /// ||eta1 - eta2||_{H^s}
    pub denominator: f64,
}

impl ContractionSample {
    pub fn ratio(&self) -> Option<f64> {
        (self.denominator > 0.0).then(|| self.numerator / self.denominator)
    }
}

pub fn dno_contraction_check(
    eta1: &Field,
    eta2: &Field,
    f: &Field,
    bottom: &BottomSpec,
    s: f64,
    method: &DnoMethod,
) -> Result<ContractionSample> {
    eta1.check_grid(eta2)?;
    let g1 = dirichlet_neumann(eta1, f, bottom, method)?;
    let g2 = dirichlet_neumann(eta2, f, bottom, method)?;
    Ok(ContractionSample {
        numerator: (&g1 - &g2).sobolev_norm(s - 1.5),
        denominator: (eta1 - eta2).sobolev_norm(s),
    })
}

/// Ratios for eta2 = eta1 + t * perturbation over the given t.
pub fn contraction_family(
    eta1: &Field,
    perturbation: &Field,
    f: &Field,
    bottom: &BottomSpec,
    s: f64,
    ts: &[f64],
    method: &DnoMethod,
) -> Result<Vec<f64>> {
    ts.iter()
        .map(|&t| {
            let eta2 = eta1.axpy(t, perturbation);
            dno_contraction_check(eta1, &eta2, f, bottom, s, method)?
                .ratio()
                .ok_or_else(|| Error::arg("zero perturbation in contraction family"))
        })
        .collect()
}

/// Flat symbol applied as a Fourier multiplier.
pub fn apply_flat(f: &Field, bottom: &BottomSpec, side: Side) -> Result<Field> {
    let m = dno_flat_multiplier(bottom, side)?;
    f.apply_real_multiplier(|k| m(norm2(k)))
}

#[cfg(test)]
mod tests;
