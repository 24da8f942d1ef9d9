//! Least-squares fits on log-log data.

use crate::spectral::Field;

/// Least-squares line y = slope * x + intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of log y against log x. Nonpositive entries are rejected.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).map(|(s, _)| s)
}

/// Power-law decay exponent of the spectrum of `u`: RMS coefficient
/// magnitude in `bins` logarithmic shells covering [k_lo, k_hi], fitted
/// against the geometric shell center. Empty or zero shells are skipped;
/// `None` when fewer than three shells carry data.
pub fn spectral_slope(u: &Field, k_lo: f64, k_hi: f64, bins: usize) -> Option<f64> {
    if !(k_lo > 0.0 && k_hi > k_lo) || bins < 2 {
        return None;
    }
    let g = u.grid();
    let c = u.spectral();
    let ratio = (k_hi / k_lo).powf(1.0 / bins as f64);
    let mut acc = vec![(0.0f64, 0usize); bins];
    for (i, ci) in c.iter().enumerate() {
        let k = g.wavenumber(i);
        if k < k_lo || k >= k_hi {
            continue;
        }
        let b = (((k / k_lo).ln() / ratio.ln()) as usize).min(bins - 1);
        acc[b].0 += ci.norm_sqr();
        acc[b].1 += 1;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (b, (sum, cnt)) in acc.iter().enumerate() {
        if *cnt == 0 || *sum == 0.0 {
            continue;
        }
        let center = k_lo * ratio.powf(b as f64 + 0.5);
        xs.push(center);
        ys.push((sum / *cnt as f64).sqrt());
    }
    if xs.len() < 3 {
        return None;
    }
    loglog_slope(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;

    #[test]
    fn recovers_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.7)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 1.7).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
        assert!(loglog_slope(&[1.0, 2.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn spectral_slope_of_power_law_field() {
        let g = Grid::periodic_1d(256).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); g.len()];
        for (i, ci) in c.iter_mut().enumerate() {
            let k = g.wavenumber(i);
            if k > 0.0 && !g.is_nyquist(i) {
                *ci = Complex64::new(k.powf(-2.0), 0.0);
            }
        }
        let u = Field::from_spectral(&g, c).unwrap();
        let s = spectral_slope(&u, 4.0, 76.0, 8).unwrap();
        assert!((s + 2.0).abs() < 0.05, "{s}");
    }
}
