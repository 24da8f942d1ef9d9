//! Discrete paradifferential quantization
//!
//! (T_a u)^(xi) = sum_eta chi(xi - eta, eta) a^(xi - eta; eta) psi(eta) u^(eta)
//!
//! where a^(theta; eta) is the normalized Fourier coefficient in x of
//! a(., eta). Output frequencies outside the grid lattice are dropped.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::spectral::{norm2, Field, Grid, Vec2};
use crate::symbols::Symbol;

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let e = |s: f64| (-1.0 / s).exp();
    e(t) / (e(t) + e(1.0 - t))
}

/// Admissible cutoff pair: chi(theta, eta) = 1 for |theta| <= eps1 |eta|,
/// 0 for |theta| >= eps2 |eta|; psi vanishes on |eta| <= 1/5 and equals 1
/// on |eta| >= 1/4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPair {
    eps1: f64,
    eps2: f64,
}

impl Default for CutoffPair {
    fn default() -> Self {
        CutoffPair {
            eps1: 0.1,
            eps2: 0.2,
        }
    }
}

impl CutoffPair {
    pub fn new(eps1: f64, eps2: f64) -> Result<CutoffPair> {
        if !(eps1 > 0.0 && eps1 < eps2 && eps2 <= 0.5) {
            return Err(Error::arg(format!(
                "cutoff radii need 0 < eps1 < eps2 <= 1/2, got {eps1}, {eps2}"
            )));
        }
        Ok(CutoffPair { eps1, eps2 })
    }

    pub fn eps1(&self) -> f64 {
        self.eps1
    }

    pub fn eps2(&self) -> f64 {
        self.eps2
    }

    pub fn chi(&self, theta: Vec2, eta: Vec2) -> f64 {
        let ne = norm2(eta);
        let nt = norm2(theta);
        if ne == 0.0 {
            return if nt == 0.0 { 1.0 } else { 0.0 };
        }
        1.0 - smooth_step((nt / ne - self.eps1) / (self.eps2 - self.eps1))
    }

    pub fn psi(&self, eta: Vec2) -> f64 {
        smooth_step((norm2(eta) - 0.2) / 0.05)
    }
}

#[derive(Debug, Clone)]
pub struct ParaOp {
    pub symbol: Symbol,
    pub cutoffs: CutoffPair,
}

impl ParaOp {
    pub fn new(symbol: Symbol, cutoffs: CutoffPair) -> ParaOp {
        ParaOp { symbol, cutoffs }
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        apply_para(self, u)
    }

    pub fn apply_adjoint(&self, u: &Field) -> Result<Field> {
        apply_para_adjoint(self, u)
    }
}

/// Fourier coefficients in x of a(., xi) for every sample frequency;
/// separable symbols reuse one transform per coefficient.
struct SymbolSpectra<'a> {
    sym: &'a Symbol,
    sep: Option<Vec<Vec<Complex64>>>,
}

impl<'a> SymbolSpectra<'a> {
    fn new(sym: &'a Symbol) -> Self {
        let g = sym.grid();
        let sep = sym
            .separable_terms()
            .map(|terms| terms.iter().map(|t| g.forward(&t.coeff)).collect());
        SymbolSpectra { sym, sep }
    }

    fn at(&self, xi: Vec2) -> Vec<Complex64> {
        let g = self.sym.grid();
        match (&self.sep, self.sym.separable_terms()) {
            (Some(chats), Some(terms)) => {
                let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
                for (ch, t) in chats.iter().zip(terms) {
                    let m = (t.multiplier)(xi);
                    if m == 0.0 {
                        continue;
                    }
                    for (o, c) in out.iter_mut().zip(ch) {
                        *o += c * m;
                    }
                }
                out
            }
            _ => {
                let samples: Vec<f64> = (0..g.len()).map(|i| self.sym.eval(i, xi)).collect();
                g.forward(&samples)
            }
        }
    }
}

fn check_inputs(op: &ParaOp, u: &Field) -> Result<()> {
    if op.symbol.grid() != u.grid() {
        return Err(Error::GridMismatch(format!(
            "symbol {} lives on a different grid",
            op.symbol.name()
        )));
    }
    Ok(())
}

fn add_modes(a: [i64; 2], b: [i64; 2]) -> [i64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

/// T_a u for a real field u. For symbols that are not even in xi the
/// result is projected onto real fields.
pub fn apply_para(op: &ParaOp, u: &Field) -> Result<Field> {
    check_inputs(op, u)?;
    let g = u.grid();
    let uh = u.spectral();
    let spectra = SymbolSpectra::new(&op.symbol);
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for (j, &uj) in uh.iter().enumerate() {
        if uj == Complex64::new(0.0, 0.0) || g.is_nyquist(j) {
            continue;
        }
        let eta = g.wavevector(j);
        let psi = op.cutoffs.psi(eta);
        if psi == 0.0 {
            continue;
        }
        let ah = spectra.at(eta);
        let mj = g.mode(j);
        for (t, &at) in ah.iter().enumerate() {
            if g.is_nyquist(t) {
                continue;
            }
            let chi = op.cutoffs.chi(g.wavevector(t), eta);
            if chi == 0.0 {
                continue;
            }
            if let Some(o) = g.index_of_mode(add_modes(mj, g.mode(t))) {
                out[o] += at * (chi * psi) * uj;
            }
        }
    }
    let f = Field::from_spectral(g, out)?;
    Ok(f)
}

/// Exact discrete L^2 adjoint (T_a)^* u.
pub fn apply_para_adjoint(op: &ParaOp, u: &Field) -> Result<Field> {
    check_inputs(op, u)?;
    let g = u.grid();
    let uh = u.spectral();
    let spectra = SymbolSpectra::new(&op.symbol);
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for (j, o) in out.iter_mut().enumerate() {
        if g.is_nyquist(j) {
            continue;
        }
        let xi = g.wavevector(j);
        let psi = op.cutoffs.psi(xi);
        if psi == 0.0 {
            continue;
        }
        let ah = spectra.at(xi);
        let mj = g.mode(j);
        for (t, &at) in ah.iter().enumerate() {
            if g.is_nyquist(t) {
                continue;
            }
            let chi = op.cutoffs.chi(g.wavevector(t), xi);
            if chi == 0.0 {
                continue;
            }
            if let Some(s) = g.index_of_mode(add_modes(mj, g.mode(t))) {
                *o += (at * (chi * psi)).conj() * uh[s];
            }
        }
    }
    Field::from_spectral(g, out)
}

/// Unit-L^2 probe sqrt(2) cos(2 pi k x_1 / L_1).
pub fn probe(grid: &Grid, k: i64) -> Result<Field> {
    let w = 2.0 * std::f64::consts::PI * k as f64 / grid.periods()[0];
    Field::from_fn(grid, |x| 2f64.sqrt() * (w * x[0]).cos())
}

#[derive(Debug, Clone)]
pub struct ProbeSample {
    pub k: i64,
    pub defect: f64,
    /// Norm of the reference operator applied to the probe.
    pub reference: f64,
    /// False when the defect sits at roundoff level relative to the
    /// reference and was left out of the fit.
    pub used: bool,
}

/// Growth exponent of an operator defect over a set of probe frequencies.
#[derive(Debug, Clone)]
pub struct OrderFit {
    /// Fitted slope of log(defect) against log(k); negative infinity when
    /// the defect vanishes to roundoff on all but at most one probe.
    pub slope: f64,
    pub samples: Vec<ProbeSample>,
}

impl OrderFit {
    pub fn vanishing(&self) -> bool {
        self.slope == f64::NEG_INFINITY
    }
}

/// Relative level below which a defect is treated as exactly zero.
pub const DEFECT_FLOOR: f64 = 1e-10;

pub(crate) fn fit_defects(samples: Vec<ProbeSample>) -> Result<OrderFit> {
    let mut samples = samples;
    for s in samples.iter_mut() {
        s.used = s.defect > DEFECT_FLOOR * s.reference.max(f64::MIN_POSITIVE);
    }
    let used: Vec<&ProbeSample> = samples.iter().filter(|s| s.used).collect();
    let slope = if used.len() < 2 {
        f64::NEG_INFINITY
    } else {
        let xs: Vec<f64> = used.iter().map(|s| s.k as f64).collect();
        let ys: Vec<f64> = used.iter().map(|s| s.defect).collect();
        loglog_slope(&xs, &ys).ok_or_else(|| Error::non_finite("order fit"))?
    };
    Ok(OrderFit { slope, samples })
}

fn check_probes(grid: &Grid, probes: &[i64]) -> Result<()> {
    if probes.len() < 3 {
        return Err(Error::arg(
            "an order fit needs at least three probe frequencies",
        ));
    }
    let kmax = grid.n()[0] as i64 / 2;
    for &k in probes {
        if k <= 0 || k >= kmax {
            return Err(Error::arg(format!("probe {k} outside 1..{kmax}")));
        }
    }
    Ok(())
}

/// Order of T_a T_b - T_{ab} measured on unit probes.
pub fn defect_order_composition(
    a: &Symbol,
    b: &Symbol,
    probes: &[i64],
    cutoffs: CutoffPair,
) -> Result<OrderFit> {
    check_probes(a.grid(), probes)?;
    let ta = ParaOp::new(a.clone(), cutoffs);
    let tb = ParaOp::new(b.clone(), cutoffs);
    let tab = ParaOp::new(a.product(b)?, cutoffs);
    let mut samples = Vec::new();
    for &k in probes {
        let u = probe(a.grid(), k)?;
        let lhs = ta.apply(&tb.apply(&u)?)?;
        let rhs = tab.apply(&u)?;
        samples.push(ProbeSample {
            k,
            defect: (&lhs - &rhs).l2_norm(),
            reference: rhs.l2_norm(),
            used: true,
        });
    }
    fit_defects(samples)
}

/// Order of (T_a)^* - T_{conj a}; symbols here are real so conj a = a.
pub fn defect_order_adjoint(a: &Symbol, probes: &[i64], cutoffs: CutoffPair) -> Result<OrderFit> {
    check_probes(a.grid(), probes)?;
    let ta = ParaOp::new(a.clone(), cutoffs);
    let mut samples = Vec::new();
    for &k in probes {
        let u = probe(a.grid(), k)?;
        let lhs = ta.apply_adjoint(&u)?;
        let rhs = ta.apply(&u)?;
        samples.push(ProbeSample {
            k,
            defect: (&lhs - &rhs).l2_norm(),
            reference: rhs.l2_norm(),
            used: true,
        });
    }
    fit_defects(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{ell_symbol, lambda_ell_symbol, lambda_symbol};

    #[test]
    fn cutoff_validation() {
        assert!(CutoffPair::new(0.2, 0.1).is_err());
        assert!(CutoffPair::new(0.0, 0.1).is_err());
        let c = CutoffPair::default();
        assert_eq!(c.chi([0.05, 0.0], [1.0, 0.0]), 1.0);
        assert_eq!(c.chi([0.25, 0.0], [1.0, 0.0]), 0.0);
        assert_eq!(c.psi([0.1, 0.0]), 0.0);
        assert_eq!(c.psi([0.3, 0.0]), 1.0);
    }

    #[test]
    fn multiplier_symbol_acts_as_multiplier() {
        let g = Grid::periodic_1d(64).unwrap();
        let s = Symbol::fourier_multiplier("k2", 2.0, &g, |xi| xi[0] * xi[0]);
        let op = ParaOp::new(s, CutoffPair::default());
        let u =
            Field::from_fn(&g, |x| (3.0 * x[0]).sin() + 0.5 * (7.0 * x[0]).cos() + 2.0).unwrap();
        let got = op.apply(&u).unwrap();
        let want = u.apply_real_multiplier(|k| k[0] * k[0]).unwrap();
        assert!((&got - &want).max_abs() < 1e-12);
    }

    #[test]
    fn separable_and_general_paths_agree() {
        let g = Grid::periodic_1d(64).unwrap();
        let eta = Field::from_fn(&g, |x| 0.2 * x[0].cos() + 0.05 * (3.0 * x[0]).sin()).unwrap();
        let sep = ell_symbol(&eta);
        let s2 = sep.clone();
        let gen = Symbol::new("ell-general", 2.0, &g, move |i, xi| s2.eval(i, xi));
        let u = Field::from_fn(&g, |x| (5.0 * x[0]).cos() + (11.0 * x[0]).sin()).unwrap();
        let a = ParaOp::new(sep, CutoffPair::default()).apply(&u).unwrap();
        let b = ParaOp::new(gen, CutoffPair::default()).apply(&u).unwrap();
        assert!((&a - &b).max_abs() < 1e-12);
    }

    #[test]
    fn adjoint_identity() {
        let g = Grid::periodic_2d(16, 16).unwrap();
        let eta = Field::from_fn(&g, |x| 0.2 * (x[0] + x[1]).cos()).unwrap();
        let op = ParaOp::new(lambda_ell_symbol(&eta), CutoffPair::default());
        let u = Field::from_fn(&g, |x| (2.0 * x[0]).cos() + (x[1] - 3.0 * x[0]).sin()).unwrap();
        let v = Field::from_fn(&g, |x| (4.0 * x[1]).sin() + (x[0] + x[1]).cos()).unwrap();
        let lhs = op.apply(&u).unwrap().inner(&v);
        let rhs = u.inner(&op.apply_adjoint(&v).unwrap());
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn flat_composition_defect_vanishes() {
        let g = Grid::periodic_1d(64).unwrap();
        let eta = Field::zeros(&g);
        let fit = defect_order_composition(
            &lambda_symbol(&eta),
            &ell_symbol(&eta),
            &[2, 4, 8],
            CutoffPair::default(),
        )
        .unwrap();
        assert!(fit.vanishing());
        assert!(defect_order_composition(
            &lambda_symbol(&eta),
            &ell_symbol(&eta),
            &[2, 4],
            CutoffPair::default()
        )
        .is_err());
    }
}
