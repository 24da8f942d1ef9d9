use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;

use super::grid::{norm2, Grid, Vec2};
use crate::error::{Error, Result};

/// Real periodic field sampled on a [`Grid`], with a lazily cached
/// normalized Fourier representation.
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("l2", &self.l2_norm())
            .finish()
    }
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("field samples"));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
            spectral: OnceLock::new(),
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Vec2) -> f64) -> Result<Field> {
        Field::new(grid, grid.points().map(f).collect())
    }

    pub fn zeros(grid: &Grid) -> Field {
        Field::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Field {
        Field {
            grid: grid.clone(),
            values: vec![c; grid.len()],
            spectral: OnceLock::new(),
        }
    }

    /// Builds a real field from Fourier coefficients. The coefficients are
    /// first projected onto the Hermitian-symmetric subspace, so the
    /// result is the real part of the synthesized function.
    pub fn from_spectral(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Field> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {}",
                coeffs.len(),
                grid.len()
            )));
        }
        if coeffs
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::non_finite("spectral coefficients"));
        }
        let mut sym = coeffs.clone();
        for (idx, s) in sym.iter_mut().enumerate() {
            let c = grid.conjugate_index(idx);
            *s = 0.5 * (coeffs[idx] + coeffs[c].conj());
        }
        let values: Vec<f64> = grid.inverse(&sym).iter().map(|c| c.re).collect();
        let field = Field::new(grid, values)?;
        let _ = field.spectral.set(sym);
        Ok(field)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Normalized coefficients c_k = (1/|T|) int u e^{-ik.x}.
    pub fn spectral(&self) -> &[Complex64] {
        self.spectral
            .get_or_init(|| self.grid.forward(&self.values))
    }

    pub fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn without_mean(&self) -> Field {
        let m = self.mean();
        self.map_unchecked(|v| v - m)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    fn map_unchecked(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            spectral: OnceLock::new(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_grid(other)?;
        Field::new(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map_unchecked(|v| a * v)
    }

    /// self + a * other
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        assert!(self.grid == other.grid, "axpy on mismatched grids");
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| u + a * v)
                .collect(),
            spectral: OnceLock::new(),
        }
    }

    /// Applies the Fourier multiplier m(k) (k the physical wavevector).
    pub fn apply_multiplier(&self, m: impl Fn(Vec2) -> Complex64) -> Result<Field> {
        let g = &self.grid;
        let coeffs: Vec<Complex64> = self
            .spectral()
            .iter()
            .enumerate()
            .map(|(i, &c)| c * m(g.wavevector(i)))
            .collect();
        Field::from_spectral(g, coeffs)
    }

    pub fn apply_real_multiplier(&self, m: impl Fn(Vec2) -> f64) -> Result<Field> {
        self.apply_multiplier(|k| Complex64::new(m(k), 0.0))
    }

    /// Spectral derivative along `axis`; the Nyquist coefficient is dropped.
    pub fn derivative(&self, axis: usize) -> Field {
        let g = &self.grid;
        let coeffs: Vec<Complex64> = self
            .spectral()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if g.is_nyquist(i) {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, g.wavevector(i)[axis])
                }
            })
            .collect();
        Field::from_spectral(g, coeffs).expect("derivative of a finite field is finite")
    }

    pub fn gradient(&self) -> Vec<Field> {
        (0..self.grid.dim()).map(|a| self.derivative(a)).collect()
    }

    pub fn laplacian(&self) -> Field {
        self.apply_real_multiplier(|k| -(k[0] * k[0] + k[1] * k[1]))
            .expect("laplacian of a finite field is finite")
    }

    /// Spectral divergence of a vector field given by components.
    pub fn divergence(components: &[Field]) -> Field {
        let mut out = components[0].derivative(0);
        for (a, c) in components.iter().enumerate().skip(1) {
            out = &out + &c.derivative(a);
        }
        out
    }

    /// 2/3-rule truncation; Nyquist modes are removed as well.
    pub fn dealiased(&self) -> Field {
        let g = &self.grid;
        let coeffs: Vec<Complex64> = self
            .spectral()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if g.is_resolved(i) && !g.is_nyquist(i) {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Field::from_spectral(g, coeffs).expect("truncation keeps finite values")
    }

    /// Sharp Fourier truncation to |k| <= kmax.
    pub fn truncated(&self, kmax: f64) -> Field {
        self.apply_real_multiplier(|k| if norm2(k) <= kmax { 1.0 } else { 0.0 })
            .expect("truncation keeps finite values")
    }

    /// Pointwise product followed by dealiasing.
    pub fn mul_dealiased(&self, other: &Field) -> Field {
        (self * other).dealiased()
    }

    pub fn l2_norm(&self) -> f64 {
        super::norms::sobolev_norm(self, 0.0)
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        super::norms::sobolev_norm(self, s)
    }

    /// Discrete L^2(T) inner product (1/N) sum u v.
    pub fn inner(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / self.values.len() as f64
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.axpy(-1.0, rhs)
    }
}

impl Mul for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        assert!(self.grid == rhs.grid, "product on mismatched grids");
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a * b)
                .collect(),
            spectral: OnceLock::new(),
        }
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan() {
        let g = Grid::periodic_1d(8).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(Field::new(&g, v).is_err());
    }

    #[test]
    fn spectral_derivative_is_exact_on_trig() {
        let g = Grid::periodic_2d(16, 16).unwrap();
        let u = Field::from_fn(&g, |x| (2.0 * x[0] + x[1]).sin()).unwrap();
        let du = u.derivative(0);
        let want = Field::from_fn(&g, |x| 2.0 * (2.0 * x[0] + x[1]).cos()).unwrap();
        assert!((&du - &want).max_abs() < 1e-12);
        let lap = u.laplacian();
        assert!((&lap + &u.scale(5.0)).max_abs() < 1e-12);
    }

    #[test]
    fn dealiasing_removes_high_modes() {
        let g = Grid::periodic_1d(24).unwrap();
        let u = Field::from_fn(&g, |x| x[0].cos() + (9.0 * x[0]).cos()).unwrap();
        let d = u.dealiased();
        let want = Field::from_fn(&g, |x| x[0].cos()).unwrap();
        assert!((&d - &want).max_abs() < 1e-13);
    }

    #[test]
    fn hermitian_projection_keeps_real_part() {
        let g = Grid::periodic_1d(16).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 16];
        c[2] = Complex64::new(1.0, 0.0);
        let f = Field::from_spectral(&g, c).unwrap();
        let want = Field::from_fn(&g, |x| (2.0 * x[0]).cos()).unwrap();
        assert!((&f - &want).max_abs() < 1e-14);
    }
}
