//! Mapped-grid finite-volume solver for the lower-fluid Laplace problem
//!
//!   Delta phi = 0 for b(x) < y < eta(x),  phi = f on y = eta,
//!   d phi / d nu = 0 on y = b.
//!
//! The strip is flattened by y = b(x) + (eta(x) - b(x)) s(sigma),
//! sigma in [0, 1], which turns the problem into div(A grad psi) = 0 with
//!
//!   A = [[J I, -z], [-z^T, (1 + |z|^2) / J]],  J = (eta - b) s',
//!   z = grad b + s grad(eta - b).
//!
//! Unknowns sit on vertices; the bottom row owns a half cell with zero
//! normal flux. The sigma-component of the flux at the top is exactly
//! G(eta) f, recovered from the top half-cell balance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresConfig, GmresOutcome};
use crate::spectral::{Field, Grid, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    /// Clusters levels toward the surface; spacing at the top shrinks
    /// by roughly beta / (e^beta - 1).
    Exponential {
        beta: f64,
    },
}

impl Grading {
    pub(crate) fn s(&self, sig: f64) -> f64 {
        match *self {
            Grading::Uniform => sig,
            Grading::Exponential { beta } => {
                1.0 - ((beta * (1.0 - sig)).exp() - 1.0) / (beta.exp() - 1.0)
            }
        }
    }

    pub(crate) fn ds(&self, sig: f64) -> f64 {
        match *self {
            Grading::Uniform => 1.0,
            Grading::Exponential { beta } => beta * (beta * (1.0 - sig)).exp() / (beta.exp() - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EllipticConfig {
    /// Number of sigma levels including bottom and surface.
    pub nz: usize,
    /// `None` picks uniform levels for finite depth and exponential
    /// clustering (beta = 6) for the truncated infinite-depth strip.
    pub grading: Option<Grading>,
    pub gmres: GmresConfig,
    /// Depth of the truncated strip used for infinite depth, in units of
    /// the largest period.
    pub truncation_periods: f64,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        EllipticConfig {
            nz: 65,
            grading: None,
            gmres: GmresConfig {
                tol: 1e-11,
                max_iter: 600,
                restart: 60,
            },
            truncation_periods: 3.0,
        }
    }
}

/// Geometry of the mapped strip together with precomputed level data.
#[derive(Debug, Clone)]
pub struct MappedStrip {
    pub(crate) grid: Grid,
    pub(crate) nz: usize,
    pub(crate) dsig: f64,
    pub(crate) dx: [f64; 2],
    pub(crate) east: [Vec<usize>; 2],
    pub(crate) west: [Vec<usize>; 2],
    /// eta - b at nodes
    pub(crate) depth: Vec<f64>,
    pub(crate) grad_depth: Vec<Vec2>,
    pub(crate) bottom: Vec<f64>,
    pub(crate) grad_bottom: Vec<Vec2>,
    pub(crate) s: Vec<f64>,
    pub(crate) sp: Vec<f64>,
    pub(crate) s_mid: Vec<f64>,
    pub(crate) sp_mid: Vec<f64>,
}

fn field_gradient(f: &Field) -> Vec<Vec2> {
    let g = f.gradient();
    (0..f.grid().len())
        .map(|i| [g[0].values()[i], g.get(1).map_or(0.0, |h| h.values()[i])])
        .collect()
}

impl MappedStrip {
    pub fn new(eta: &Field, bottom: &Field, nz: usize, grading: Grading) -> Result<MappedStrip> {
        eta.check_grid(bottom)?;
        if nz < 5 {
            return Err(Error::arg(format!(
                "need at least 5 sigma levels, got {nz}"
            )));
        }
        let grid = eta.grid().clone();
        let depth: Vec<f64> = eta
            .values()
            .iter()
            .zip(bottom.values())
            .map(|(e, b)| e - b)
            .collect();
        let min_sep = depth.iter().copied().fold(f64::INFINITY, f64::min);
        if min_sep <= 0.0 {
            return Err(Error::Geometry {
                min_separation: min_sep,
            });
        }
        let ge = field_gradient(eta);
        let gb = field_gradient(bottom);
        let grad_depth = ge
            .iter()
            .zip(&gb)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
            .collect();
        let dsig = 1.0 / (nz - 1) as f64;
        let sig = |j: f64| j * dsig;
        let s = (0..nz).map(|j| grading.s(sig(j as f64))).collect();
        let sp = (0..nz).map(|j| grading.ds(sig(j as f64))).collect();
        let s_mid = (0..nz - 1)
            .map(|j| grading.s(sig(j as f64 + 0.5)))
            .collect();
        let sp_mid = (0..nz - 1)
            .map(|j| grading.ds(sig(j as f64 + 0.5)))
            .collect();
        let n = grid.len();
        let dim = grid.dim();
        let mut east = [Vec::new(), Vec::new()];
        let mut west = [Vec::new(), Vec::new()];
        let mut dx = [1.0; 2];
        for a in 0..dim {
            east[a] = (0..n).map(|i| grid.shift(i, a, 1)).collect();
            west[a] = (0..n).map(|i| grid.shift(i, a, -1)).collect();
            dx[a] = grid.spacing(a);
        }
        Ok(MappedStrip {
            grid,
            nz,
            dsig,
            dx,
            east,
            west,
            depth,
            grad_depth,
            bottom: bottom.values().to_vec(),
            grad_bottom: gb,
            s,
            sp,
            s_mid,
            sp_mid,
        })
    }

    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn n(&self) -> usize {
        self.grid.len()
    }

    /// Tilt z and Jacobian J at node i and mapped level with values (s, s').
    pub(crate) fn metric(&self, i: usize, s: f64, sp: f64) -> (Vec2, f64) {
        let gb = self.grad_bottom[i];
        let gd = self.grad_depth[i];
        ([gb[0] + s * gd[0], gb[1] + s * gd[1]], self.depth[i] * sp)
    }

    /// psi_sigma at node (i, j) by second-order differences.
    pub(crate) fn psi_sigma(&self, psi: &[f64], i: usize, j: usize) -> f64 {
        let n = self.n();
        let at = |jj: usize| psi[jj * n + i];
        if j == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * self.dsig)
        } else if j == self.nz - 1 {
            (3.0 * at(j) - 4.0 * at(j - 1) + at(j - 2)) / (2.0 * self.dsig)
        } else {
            (at(j + 1) - at(j - 1)) / (2.0 * self.dsig)
        }
    }

    /// Central x-derivative along `a` at node (i, j).
    pub(crate) fn psi_x(&self, psi: &[f64], a: usize, i: usize, j: usize) -> f64 {
        let n = self.n();
        (psi[j * n + self.east[a][i]] - psi[j * n + self.west[a][i]]) / (2.0 * self.dx[a])
    }

    /// x-flux through the face between i and its east neighbour along a.
    fn xflux(&self, psi: &[f64], a: usize, i: usize, j: usize) -> f64 {
        let n = self.n();
        let e = self.east[a][i];
        let (zi, ji) = self.metric(i, self.s[j], self.sp[j]);
        let (ze, je) = self.metric(e, self.s[j], self.sp[j]);
        let z = [0.5 * (zi[0] + ze[0]), 0.5 * (zi[1] + ze[1])];
        let jf = 0.5 * (ji + je);
        let dpa = (psi[j * n + e] - psi[j * n + i]) / self.dx[a];
        if j == 0 {
            let mut g = [0.0; 2];
            for b in 0..self.dim() {
                g[b] = if b == a {
                    dpa
                } else {
                    0.5 * (self.psi_x(psi, b, i, 0) + self.psi_x(psi, b, e, 0))
                };
            }
            let zg = z[0] * g[0] + z[1] * g[1];
            let zz = 1.0 + z[0] * z[0] + z[1] * z[1];
            jf * (g[a] - z[a] * zg / zz)
        } else {
            let ps = 0.5 * (self.psi_sigma(psi, i, j) + self.psi_sigma(psi, e, j));
            jf * dpa - z[a] * ps
        }
    }

    /// sigma-flux through the face between levels j and j+1 at node i.
    fn sflux(&self, psi: &[f64], i: usize, j: usize) -> f64 {
        let n = self.n();
        let (z, jac) = self.metric(i, self.s_mid[j], self.sp_mid[j]);
        let c = (1.0 + z[0] * z[0] + z[1] * z[1]) / jac;
        let mut cross = 0.0;
        for a in 0..self.dim() {
            let px = 0.5 * (self.psi_x(psi, a, i, j) + self.psi_x(psi, a, i, j + 1));
            cross += z[a] * px;
        }
        -cross + c * (psi[(j + 1) * n + i] - psi[j * n + i]) / self.dsig
    }

    fn xdiv(&self, psi: &[f64], j: usize, out: &mut [f64]) {
        let n = self.n();
        out.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..self.dim() {
            let fx: Vec<f64> = (0..n).map(|i| self.xflux(psi, a, i, j)).collect();
            for i in 0..n {
                out[i] += (fx[i] - fx[self.west[a][i]]) / self.dx[a];
            }
        }
    }

    /// Discrete flux balance on every non-surface level.
    pub(crate) fn residual(&self, psi: &[f64]) -> Vec<f64> {
        let n = self.n();
        let nz = self.nz;
        let mut out = vec![0.0; (nz - 1) * n];
        let mut below = vec![0.0; n];
        let mut div = vec![0.0; n];
        for j in 0..nz - 1 {
            self.xdiv(psi, j, &mut div);
            let w = if j == 0 { 0.5 } else { 1.0 };
            for i in 0..n {
                let above = self.sflux(psi, i, j);
                out[j * n + i] = w * self.dsig * div[i] + above - below[i];
                below[i] = above;
            }
        }
        out
    }

    /// Conormal flux at the surface, i.e. G(eta) f.
    pub(crate) fn surface_flux(&self, psi: &[f64]) -> Vec<f64> {
        let n = self.n();
        let top = self.nz - 1;
        let mut div = vec![0.0; n];
        self.xdiv(psi, top, &mut div);
        (0..n)
            .map(|i| self.sflux(psi, i, top - 1) - 0.5 * self.dsig * div[i])
            .collect()
    }

    /// Exact inverse of the discrete operator for a flat strip of the mean
    /// depth, used as right preconditioner.
    fn flat_solve(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let rows = self.nz - 1;
        let dbar = self.depth.iter().sum::<f64>() / n as f64;
        let g = &self.grid;
        let mut hat: Vec<Vec<Complex64>> = (0..rows)
            .map(|j| g.forward(&v[j * n..(j + 1) * n]))
            .collect();
        let c_mid: Vec<f64> = self.sp_mid.iter().map(|sp| 1.0 / (dbar * sp)).collect();
        let mut lower = vec![0.0; rows];
        let mut diag = vec![0.0; rows];
        let mut upper = vec![0.0; rows];
        let mut col = vec![Complex64::new(0.0, 0.0); rows];
        for m in 0..n {
            let k = g.wavevector(m);
            let mut kap2 = 0.0;
            for a in 0..self.dim() {
                kap2 += (2.0 - 2.0 * (k[a] * self.dx[a]).cos()) / (self.dx[a] * self.dx[a]);
            }
            for j in 0..rows {
                let w = if j == 0 { 0.5 } else { 1.0 };
                let up = c_mid[j] / self.dsig;
                let dn = if j > 0 { c_mid[j - 1] / self.dsig } else { 0.0 };
                lower[j] = dn;
                upper[j] = if j + 1 < rows { up } else { 0.0 };
                diag[j] = -w * self.dsig * dbar * self.sp[j] * kap2 - up - dn;
                col[j] = hat[j][m];
            }
            thomas(&lower, &diag, &upper, &mut col);
            for j in 0..rows {
                hat[j][m] = col[j];
            }
        }
        let mut out = vec![0.0; rows * n];
        for j in 0..rows {
            let back = g.inverse(&hat[j]);
            for i in 0..n {
                out[j * n + i] = back[i].re;
            }
        }
        out
    }
}

/// Tridiagonal solve with real coefficients and complex right-hand side.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [Complex64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    rhs[0] /= beta;
    for j in 1..n {
        beta = diag[j] - lower[j] * c[j - 1];
        c[j] = upper[j] / beta;
        let prev = rhs[j - 1];
        rhs[j] = (rhs[j] - prev * lower[j]) / beta;
    }
    for j in (0..n - 1).rev() {
        let next = rhs[j + 1];
        rhs[j] -= next * c[j];
    }
}

/// Interior potential on the mapped strip.
#[derive(Debug, Clone)]
pub struct InteriorSolution {
    pub(crate) strip: MappedStrip,
    /// psi at level j, node i stored at j * N + i; the last level is f.
    pub(crate) psi: Vec<f64>,
    /// Whether the strip is the mirror image of an upper fluid layer.
    pub(crate) reflected: bool,
}

impl InteriorSolution {
    pub fn levels(&self) -> usize {
        self.strip.nz
    }

    pub fn potential(&self) -> &[f64] {
        &self.psi
    }

    /// Physical height of node (i, j).
    pub fn height(&self, i: usize, j: usize) -> f64 {
        let st = &self.strip;
        let y = st.bottom[i] + st.depth[i] * st.s[j];
        if self.reflected {
            -y
        } else {
            y
        }
    }
}

pub(crate) struct EllipticOutput {
    pub value: Field,
    pub interior: InteriorSolution,
    pub outcome: GmresOutcome,
}

/// Lower-fluid G(eta) f over the bottom graph `bottom`.
pub(crate) fn elliptic_dn(
    eta: &Field,
    f: &Field,
    bottom: &Field,
    grading: Grading,
    cfg: &EllipticConfig,
) -> Result<EllipticOutput> {
    eta.check_grid(f)?;
    let strip = MappedStrip::new(eta, bottom, cfg.nz, grading)?;
    let n = strip.n();
    let nz = strip.nz;
    let unknowns = (nz - 1) * n;

    let mut lifted = vec![0.0; nz * n];
    lifted[(nz - 1) * n..].copy_from_slice(f.values());
    let rhs: Vec<f64> = strip.residual(&lifted).iter().map(|r| -r).collect();

    let mut work = vec![0.0; nz * n];
    let outcome = gmres(
        |u: &[f64]| {
            work[..unknowns].copy_from_slice(u);
            work[unknowns..].iter_mut().for_each(|v| *v = 0.0);
            Ok(strip.residual(&work))
        },
        |v: &[f64]| Ok(strip.flat_solve(v)),
        &rhs,
        None,
        &cfg.gmres,
    )?
    .into_result("mapped-grid Laplace solve")?;

    lifted[..unknowns].copy_from_slice(&outcome.x);
    let value = Field::new(eta.grid(), strip.surface_flux(&lifted))?;
    Ok(EllipticOutput {
        value,
        interior: InteriorSolution {
            strip,
            psi: lifted,
            reflected: false,
        },
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradings_map_unit_interval() {
        for g in [Grading::Uniform, Grading::Exponential { beta: 6.0 }] {
            assert!(g.s(0.0).abs() < 1e-15);
            assert!((g.s(1.0) - 1.0).abs() < 1e-15);
            let h = 1e-6;
            let fd = (g.s(0.3 + h) - g.s(0.3 - h)) / (2.0 * h);
            assert!((fd - g.ds(0.3)).abs() < 1e-6);
        }
    }

    #[test]
    fn thomas_solves_tridiagonal() {
        let lower = [0.0, 1.0, 1.0];
        let diag = [-4.0, -4.0, -4.0];
        let upper = [1.0, 1.0, 0.0];
        let x = [1.0, 2.0, 3.0];
        let mut rhs: Vec<Complex64> = (0..3)
            .map(|j| {
                let mut v = diag[j] * x[j];
                if j > 0 {
                    v += lower[j] * x[j - 1];
                }
                if j < 2 {
                    v += upper[j] * x[j + 1];
                }
                Complex64::new(v, -v)
            })
            .collect();
        thomas(&lower, &diag, &upper, &mut rhs);
        for j in 0..3 {
            assert!((rhs[j].re - x[j]).abs() < 1e-14);
            assert!((rhs[j].im + x[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_strip_converges_in_one_iteration() {
        let g = Grid::periodic_1d(32).unwrap();
        let eta = Field::zeros(&g);
        let b = Field::constant(&g, -1.0);
        let f = Field::from_fn(&g, |x| x[0].cos()).unwrap();
        let out = elliptic_dn(&eta, &f, &b, Grading::Uniform, &EllipticConfig::default()).unwrap();
        assert!(out.outcome.iterations <= 1);
        let want = 1f64.tanh();
        let got = 2.0 * out.value.spectral()[1].re;
        assert!((got - want).abs() < 5e-3, "{got}");
    }
}
