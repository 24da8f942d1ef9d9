use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// A point or wavevector. In one dimension the second component is zero.
pub type Vec2 = [f64; 2];

/// Periodic tensor grid on the torus of the given periods, d = 1 or 2.
///
/// Samples are stored row-major with the last axis fastest. Cloning is cheap:
/// the FFT plans and wavevector tables are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: [usize; 2],
    periods: [f64; 2],
    fwd: [Option<Arc<dyn Fft<f64>>>; 2],
    inv: [Option<Arc<dyn Fft<f64>>>; 2],
    modes: Vec<[i64; 2]>,
    wavevec: Vec<Vec2>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n())
            .field("periods", &self.periods())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.periods == other.inner.periods)
    }
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) || n == 1 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Grid {
    pub fn new(periods: &[f64], n: &[usize]) -> Result<Grid> {
        let dim = n.len();
        if dim == 0 || dim > 2 || periods.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "need 1 or 2 axes with matching periods, got n={n:?} periods={periods:?}"
            )));
        }
        for (&na, &la) in n.iter().zip(periods) {
            if na < 8 || na % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "resolution {na} must be even and at least 8"
                )));
            }
            if !(la.is_finite() && la > 0.0) {
                return Err(Error::InvalidGrid(format!("period {la} must be positive")));
            }
        }
        let mut nn = [1usize; 2];
        let mut pp = [2.0 * PI; 2];
        nn[..dim].copy_from_slice(n);
        pp[..dim].copy_from_slice(periods);

        let mut planner = FftPlanner::new();
        let mut fwd: [Option<Arc<dyn Fft<f64>>>; 2] = [None, None];
        let mut inv: [Option<Arc<dyn Fft<f64>>>; 2] = [None, None];
        for a in 0..dim {
            fwd[a] = Some(planner.plan_fft_forward(nn[a]));
            inv[a] = Some(planner.plan_fft_inverse(nn[a]));
        }

        let total = nn[0] * nn[1];
        let mut modes = Vec::with_capacity(total);
        let mut wavevec = Vec::with_capacity(total);
        for i0 in 0..nn[0] {
            for i1 in 0..nn[1] {
                let m = [signed_mode(i0, nn[0]), signed_mode(i1, nn[1])];
                modes.push(m);
                wavevec.push([
                    2.0 * PI * m[0] as f64 / pp[0],
                    2.0 * PI * m[1] as f64 / pp[1],
                ]);
            }
        }
        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                n: nn,
                periods: pp,
                fwd,
                inv,
                modes,
                wavevec,
            }),
        })
    }

    /// One-dimensional grid on [0, 2pi).
    pub fn periodic_1d(n: usize) -> Result<Grid> {
        Grid::new(&[2.0 * PI], &[n])
    }

    /// Two-dimensional grid on [0, 2pi)^2.
    pub fn periodic_2d(n0: usize, n1: usize) -> Result<Grid> {
        Grid::new(&[2.0 * PI, 2.0 * PI], &[n0, n1])
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> &[usize] {
        &self.inner.n[..self.inner.dim]
    }

    pub fn periods(&self) -> &[f64] {
        &self.inner.periods[..self.inner.dim]
    }

    pub fn len(&self) -> usize {
        self.inner.n[0] * self.inner.n[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume |T| of the periodic cell.
    pub fn volume(&self) -> f64 {
        self.periods().iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.inner.periods[axis] / self.inner.n[axis] as f64
    }

    /// Volume element of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    pub fn point(&self, idx: usize) -> Vec2 {
        let n1 = self.inner.n[1];
        let (i0, i1) = (idx / n1, idx % n1);
        [
            i0 as f64 * self.spacing(0),
            if self.inner.dim == 2 {
                i1 as f64 * self.spacing(1)
            } else {
                0.0
            },
        ]
    }

    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Integer mode numbers of the Fourier coefficient stored at `idx`.
    pub fn mode(&self, idx: usize) -> [i64; 2] {
        self.inner.modes[idx]
    }

    /// Physical wavevector 2 pi m / L of the coefficient stored at `idx`.
    pub fn wavevector(&self, idx: usize) -> Vec2 {
        self.inner.wavevec[idx]
    }

    pub fn wavevectors(&self) -> &[Vec2] {
        &self.inner.wavevec
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        norm2(self.inner.wavevec[idx])
    }

    /// Storage index of the mode `m`, or `None` when `m` lies outside the
    /// symmetric lattice |m_a| < n_a / 2 (the Nyquist line is excluded).
    pub fn index_of_mode(&self, m: [i64; 2]) -> Option<usize> {
        let mut idx = 0usize;
        for a in 0..2 {
            let n = self.inner.n[a] as i64;
            if n == 1 {
                if m[a] != 0 {
                    return None;
                }
                continue;
            }
            if 2 * m[a].abs() >= n {
                return None;
            }
            let i = m[a].rem_euclid(n) as usize;
            idx = if a == 0 { i } else { idx * self.inner.n[1] + i };
        }
        Some(idx)
    }

    /// Storage index of the mode -m (aliased onto the lattice).
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n1 = self.inner.n[1];
        let (i0, i1) = (idx / n1, idx % n1);
        let j0 = (self.inner.n[0] - i0) % self.inner.n[0];
        let j1 = (n1 - i1) % n1;
        j0 * n1 + j1
    }

    /// Whether the mode survives 2/3-rule dealiasing.
    pub fn is_resolved(&self, idx: usize) -> bool {
        let m = self.inner.modes[idx];
        (0..self.inner.dim).all(|a| 3 * m[a].unsigned_abs() as usize <= self.inner.n[a])
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        let m = self.inner.modes[idx];
        (0..self.inner.dim).any(|a| 2 * m[a].unsigned_abs() as usize == self.inner.n[a])
    }

    /// Largest wavenumber magnitude kept by the 2/3 rule along the
    /// coarsest axis.
    pub fn dealias_wavenumber(&self) -> f64 {
        (0..self.inner.dim)
            .map(|a| 2.0 * PI * (self.inner.n[a] / 3) as f64 / self.inner.periods[a])
            .fold(f64::INFINITY, f64::min)
    }

    /// Normalized forward transform: c_k = (1/N) sum_x u(x) e^{-i k x}.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        let scale = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Synthesis u(x) = sum_k c_k e^{i k x}; returns complex samples.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coeffs.to_vec();
        self.transform(&mut buf, true);
        buf
    }

    /// Unnormalized in-place transform over all axes.
    pub fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.len(), "buffer does not match grid");
        let plans = if inverse {
            &self.inner.inv
        } else {
            &self.inner.fwd
        };
        let [n0, n1] = self.inner.n;
        if self.inner.dim == 1 {
            plans[0].as_ref().unwrap().process(buf);
            return;
        }
        plans[1].as_ref().unwrap().process(buf);
        let mut col = vec![Complex64::new(0.0, 0.0); n0];
        let p0 = plans[0].as_ref().unwrap();
        for i1 in 0..n1 {
            for i0 in 0..n0 {
                col[i0] = buf[i0 * n1 + i1];
            }
            p0.process(&mut col);
            for i0 in 0..n0 {
                buf[i0 * n1 + i1] = col[i0];
            }
        }
    }

    /// Index shifted by `s` lattice steps along `axis`, periodically.
    pub fn shift(&self, idx: usize, axis: usize, s: i64) -> usize {
        let n1 = self.inner.n[1];
        let (i0, i1) = (idx / n1, idx % n1);
        if axis == 0 {
            let n0 = self.inner.n[0] as i64;
            ((i0 as i64 + s).rem_euclid(n0) as usize) * n1 + i1
        } else {
            let n1i = n1 as i64;
            i0 * n1 + (i1 as i64 + s).rem_euclid(n1i) as usize
        }
    }
}

pub fn norm2(v: Vec2) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_resolutions() {
        assert!(Grid::periodic_1d(7).is_err());
        assert!(Grid::periodic_1d(6).is_err());
        assert!(Grid::new(&[0.0], &[16]).is_err());
        assert!(Grid::new(&[1.0, 1.0, 1.0], &[8, 8, 8]).is_err());
        assert!(Grid::periodic_2d(16, 8).is_ok());
    }

    #[test]
    fn mode_lookup_roundtrips() {
        let g = Grid::periodic_2d(8, 12).unwrap();
        for idx in 0..g.len() {
            let m = g.mode(idx);
            match g.index_of_mode(m) {
                Some(j) => assert_eq!(j, idx),
                None => assert!(g.is_nyquist(idx)),
            }
            let c = g.conjugate_index(idx);
            let mc = g.mode(c);
            if !g.is_nyquist(idx) {
                assert_eq!(mc, [-m[0], -m[1]]);
            }
        }
    }

    #[test]
    fn forward_of_cosine() {
        let g = Grid::periodic_1d(16).unwrap();
        let v: Vec<f64> = g.points().map(|x| (3.0 * x[0]).cos()).collect();
        let c = g.forward(&v);
        let i3 = g.index_of_mode([3, 0]).unwrap();
        let im3 = g.index_of_mode([-3, 0]).unwrap();
        assert!((c[i3].re - 0.5).abs() < 1e-14);
        assert!((c[im3].re - 0.5).abs() < 1e-14);
        let back = g.inverse(&c);
        for (a, b) in back.iter().zip(&v) {
            assert!((a.re - b).abs() < 1e-14);
        }
    }
}
