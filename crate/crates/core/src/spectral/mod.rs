//! Periodic grids, real fields with cached spectra, Sobolev norms.

mod field;
mod grid;
mod norms;

pub use field::Field;
pub use grid::{dot, norm2, Grid, Vec2};
pub use norms::{sobolev_norm, tail_fraction, zs_norm};

use num_complex::Complex64;

use crate::error::Result;

pub fn to_spectral(u: &Field) -> &[Complex64] {
    u.spectral()
}

pub fn to_physical(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Field> {
    Field::from_spectral(grid, coeffs)
}

pub fn apply_multiplier(u: &Field, m: impl Fn(Vec2) -> Complex64) -> Result<Field> {
    u.apply_multiplier(m)
}
