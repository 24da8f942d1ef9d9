//! Initial interfaces: explicit mode lists and seeded random H^s samples.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{dot, Field, Grid};

/// a cos(k.x + phase), with k in lattice units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: [i64; 2],
    pub amplitude: f64,
    pub phase: f64,
}

pub fn from_modes(grid: &Grid, mean: f64, modes: &[Mode]) -> Result<Field> {
    let per = grid.periods();
    let mut wave = Vec::with_capacity(modes.len());
    for m in modes {
        grid.index_of_mode(m.k)
            .filter(|&i| grid.is_resolved(i))
            .ok_or_else(|| {
                Error::arg(format!(
                    "mode {:?} is not resolved on this grid",
                    &m.k[..grid.dim()]
                ))
            })?;
        let mut kv = [0.0; 2];
        for a in 0..grid.dim() {
            kv[a] = 2.0 * std::f64::consts::PI * m.k[a] as f64 / per[a];
        }
        wave.push((kv, m));
    }
    Field::from_fn(grid, |x| {
        mean + wave
            .iter()
            .map(|(kv, m)| m.amplitude * (dot(*kv, x) + m.phase).cos())
            .sum::<f64>()
    })
}

/// Scale applied to a random sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// max |eta| equals the value.
    Amplitude(f64),
    /// max |grad eta| equals the value.
    MaxSlope(f64),
    /// ||eta||_{H^s} equals the value.
    Sobolev(f64),
}

/// Default excess decay of the random sampler.
pub const SAMPLER_GAMMA: f64 = 0.1;

/// Coefficients (1+|k|^2)^{-(s+gamma)/2} times a seeded unit phase on every
/// resolved nonzero mode, Hermitian-symmetrized and rescaled. The sample
/// lies in H^s but in no H^{s+gamma+d/2}.
pub fn random_hs(grid: &Grid, s: f64, gamma: f64, seed: u64, norm: Normalization) -> Result<Field> {
    if !(s.is_finite() && gamma.is_finite()) {
        return Err(Error::arg("sampler exponents must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..grid.len() {
        // phases are drawn for every index so the sample does not depend on
        // which modes the dealiasing rule keeps
        let theta: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        let j = grid.conjugate_index(i);
        if j < i || !grid.is_resolved(i) || grid.wavenumber(i) == 0.0 || grid.is_nyquist(i) {
            continue;
        }
        let k2 = grid.wavenumber(i).powi(2);
        let a = (1.0 + k2).powf(-(s + gamma) / 2.0);
        c[i] = Complex64::from_polar(a, theta);
        c[j] = c[i].conj();
    }
    let raw = Field::from_spectral(grid, c)?;
    let size = match norm {
        Normalization::Amplitude(_) => raw.max_abs(),
        Normalization::MaxSlope(_) => {
            let g = raw.gradient();
            (0..grid.len())
                .map(|i| g.iter().map(|d| d.values()[i].powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max)
        }
        Normalization::Sobolev(_) => raw.sobolev_norm(s),
    };
    let target = match norm {
        Normalization::Amplitude(v) | Normalization::MaxSlope(v) | Normalization::Sobolev(v) => v,
    };
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::arg(
            "normalization target must be finite and nonnegative",
        ));
    }
    if size == 0.0 {
        return Ok(raw);
    }
    Ok(raw.scale(target / size))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_roundtrip() {
        let g = Grid::periodic_1d(32).unwrap();
        let eta = from_modes(
            &g,
            0.5,
            &[Mode {
                k: [3, 0],
                amplitude: 0.2,
                phase: 0.0,
            }],
        )
        .unwrap();
        let c = eta.spectral()[g.index_of_mode([3, 0]).unwrap()];
        assert!((c.re - 0.1).abs() < 1e-15 && c.im.abs() < 1e-15);
        assert!((eta.mean() - 0.5).abs() < 1e-15);
        let bad = Mode {
            k: [12, 0],
            amplitude: 1.0,
            phase: 0.0,
        };
        assert!(from_modes(&g, 0.0, &[bad]).is_err());
    }

    #[test]
    fn random_sample_is_seeded_and_normalized() {
        let g = Grid::periodic_2d(32, 32).unwrap();
        let a = random_hs(&g, 3.0, SAMPLER_GAMMA, 7, Normalization::Amplitude(0.1)).unwrap();
        let b = random_hs(&g, 3.0, SAMPLER_GAMMA, 7, Normalization::Amplitude(0.1)).unwrap();
        let c = random_hs(&g, 3.0, SAMPLER_GAMMA, 8, Normalization::Amplitude(0.1)).unwrap();
        assert_eq!(a.values(), b.values());
        assert!((&a - &c).max_abs() > 1e-3);
        assert!((a.max_abs() - 0.1).abs() < 1e-15);
        assert!(a.mean().abs() < 1e-15);
        assert!((&a.dealiased() - &a).max_abs() < 1e-16);
    }

    #[test]
    fn sample_decay_matches_exponent() {
        let g = Grid::periodic_1d(512).unwrap();
        let u = random_hs(&g, 2.0, 0.0, 1, Normalization::Sobolev(1.0)).unwrap();
        let slope = crate::fit::spectral_slope(&u, 4.0, 150.0, 8).unwrap();
        assert!((slope + 2.0).abs() < 0.05, "slope {slope}");
    }
}
