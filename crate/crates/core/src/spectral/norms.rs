use super::field::Field;
use crate::error::{Error, Result};

/// ||u||_{H^s} = (sum_k (1+|k|^2)^s |c_k|^2)^{1/2} with normalized c_k.
pub fn sobolev_norm(u: &Field, s: f64) -> f64 {
    let g = u.grid();
    u.spectral()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k2 = g.wavenumber(i).powi(2);
            (1.0 + k2).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Discrete Z^s norm of a sampled trajectory: the largest H^s norm over the
/// samples plus the trapezoidal approximation of
/// (int ||eta(t)||^2_{H^{s+3/2}} dt)^{1/2}.
pub fn zs_norm(samples: &[(f64, Field)], s: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::arg("Z^s norm needs at least two time samples"));
    }
    for w in samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::arg("Z^s sample times must be strictly increasing"));
        }
        w[0].1.check_grid(&w[1].1)?;
    }
    let sup = samples
        .iter()
        .map(|(_, f)| sobolev_norm(f, s))
        .fold(0.0, f64::max);
    let sq: Vec<f64> = samples
        .iter()
        .map(|(_, f)| sobolev_norm(f, s + 1.5).powi(2))
        .collect();
    let integral: f64 = samples
        .windows(2)
        .zip(sq.windows(2))
        .map(|(t, q)| 0.5 * (t[1].0 - t[0].0) * (q[0] + q[1]))
        .sum();
    Ok(sup + integral.sqrt())
}

/// Fraction of spectral amplitude living in the top third of the resolved
/// band, relative to the largest nonzero-mode amplitude. Used as an
/// under-resolution indicator.
pub fn tail_fraction(u: &Field) -> f64 {
    let g = u.grid();
    let kd = g.dealias_wavenumber();
    let mut top = 0.0f64;
    let mut all = 0.0f64;
    for (i, c) in u.spectral().iter().enumerate() {
        let k = g.wavenumber(i);
        if k == 0.0 {
            continue;
        }
        let a = c.norm();
        all = all.max(a);
        if k > 2.0 * kd / 3.0 {
            top = top.max(a);
        }
    }
    if all == 0.0 {
        0.0
    } else {
        top / all
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn sobolev_of_single_mode() {
        let g = Grid::periodic_1d(32).unwrap();
        let u = Field::from_fn(&g, |x| (3.0 * x[0]).cos()).unwrap();
        // two coefficients of size 1/2
        let want = (0.5f64 * 10f64.powf(2.0)).sqrt();
        assert!((sobolev_norm(&u, 2.0) - want).abs() < 1e-12);
        assert!((sobolev_norm(&u, 0.0) - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zs_of_constant_trajectory() {
        let g = Grid::periodic_1d(16).unwrap();
        let u = Field::from_fn(&g, |x| x[0].sin()).unwrap();
        let samples = vec![(0.0, u.clone()), (0.5, u.clone()), (1.0, u.clone())];
        let s = 2.0;
        let want = sobolev_norm(&u, s) + sobolev_norm(&u, s + 1.5);
        assert!((zs_norm(&samples, s).unwrap() - want).abs() < 1e-12);
        assert!(zs_norm(&samples[..1], s).is_err());
    }
}
