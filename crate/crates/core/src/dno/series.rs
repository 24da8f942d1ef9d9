//! Operator expansion of G(eta) in powers of eta for a flat bottom at
//! depth h (or infinite depth), in the symmetric recursive form
//!
//!   G_J f = (1/J!) |D|^{J-1} b_J D.(eta^J D f)
//!           - sum_{n=1}^{J} (1/n!) a_n |D|^n (eta^n G_{J-n} f)
//!
//! with D = -i grad, t = tanh(h|D|), a_n = t (n odd) or 1 (n even),
//! b_J = 1 (J odd) or t (J even). For infinite depth all a_n = b_J = 1.

use crate::error::{Error, Result};
use crate::spectral::{norm2, Field};

#[derive(Debug, Clone, Copy)]
pub struct SeriesConfig {
    /// Highest power of eta kept.
    pub order: usize,
    /// A trailing term larger than this fraction of the leading terms that
    /// is not decaying is reported as divergence.
    pub divergence_tol: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            order: 16,
            divergence_tol: 1e-8,
        }
    }
}

fn depth_factor(depth: Option<f64>, k: f64) -> f64 {
    match depth {
        None => 1.0,
        Some(h) => (h * k).tanh(),
    }
}

/// Lower-fluid G(eta) f by the truncated expansion. Returns the sum and
/// the L^2 norms of the individual terms G_0 f, ..., G_M f.
pub fn series_dn(
    eta: &Field,
    f: &Field,
    depth: Option<f64>,
    cfg: &SeriesConfig,
) -> Result<(Field, Vec<f64>)> {
    eta.check_grid(f)?;
    let m = cfg.order;
    let t = move |k: f64| depth_factor(depth, k);
    let v0 = f.apply_real_multiplier(|k| {
        let a = norm2(k);
        a * t(a)
    })?;
    let mut terms = vec![v0];
    let mut norms = vec![terms[0].l2_norm()];

    if eta.max_abs() > 0.0 && m > 0 {
        let grad_f = f.gradient();
        let mut powers = vec![Field::constant(eta.grid(), 1.0)];
        for n in 1..=m {
            let next = powers[n - 1].mul_dealiased(eta);
            powers.push(next);
        }
        let mut fact = vec![1.0f64];
        for n in 1..=m {
            fact.push(fact[n - 1] * n as f64);
        }
        for j in 1..=m {
            // D.(eta^J D f) = -div(eta^J grad f)
            let flux: Vec<Field> = grad_f.iter().map(|g| &powers[j] * g).collect();
            let dd = Field::divergence(&flux).scale(-1.0);
            let odd_j = j % 2 == 1;
            let mut acc = dd.apply_real_multiplier(|k| {
                let a = norm2(k);
                let b = if odd_j { 1.0 } else { t(a) };
                a.powi(j as i32 - 1) * b / fact[j]
            })?;
            for n in 1..=j {
                let prod = powers[n].mul_dealiased(&terms[j - n]);
                let odd_n = n % 2 == 1;
                let contrib = prod.apply_real_multiplier(|k| {
                    let a = norm2(k);
                    let an = if odd_n { t(a) } else { 1.0 };
                    a.powi(n as i32) * an / fact[n]
                })?;
                acc = &acc - &contrib;
            }
            let vj = acc.dealiased();
            norms.push(vj.l2_norm());
            terms.push(vj);
        }
        check_convergence(&norms, cfg)?;
    }
    let mut sum = terms[0].clone();
    for v in &terms[1..] {
        sum = &sum + v;
    }
    Ok((sum, norms))
}

fn check_convergence(norms: &[f64], cfg: &SeriesConfig) -> Result<()> {
    if norms.iter().any(|v| !v.is_finite()) {
        return Err(Error::SeriesDivergence {
            term_norms: norms.to_vec(),
        });
    }
    let m = norms.len() - 1;
    if m < 2 {
        return Ok(());
    }
    let scale = norms[..=1].iter().fold(0.0f64, |a, b| a.max(*b));
    let last = norms[m];
    let growing = last >= norms[m - 1] && last >= norms[m - 2];
    if scale > 0.0 && last > cfg.divergence_tol * scale && growing {
        return Err(Error::SeriesDivergence {
            term_norms: norms.to_vec(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn first_order_term_matches_closed_form() {
        // G_1 f = D eta D f - |D| eta |D| f in infinite depth
        let g = Grid::periodic_1d(64).unwrap();
        let eta = Field::from_fn(&g, |x| 1e-3 * (2.0 * x[0]).cos()).unwrap();
        let f = Field::from_fn(&g, |x| (3.0 * x[0]).cos()).unwrap();
        let cfg = SeriesConfig {
            order: 1,
            ..Default::default()
        };
        let (s, _) = series_dn(&eta, &f, None, &cfg).unwrap();
        let absd = |u: &Field| u.apply_real_multiplier(|k| k[0].abs()).unwrap();
        let g0 = absd(&f);
        let dd = (&eta * &f.derivative(0)).derivative(0).scale(-1.0);
        let g1 = &dd - &absd(&(&eta * &g0));
        let want = &g0 + &g1;
        assert!((&s - &want).max_abs() < 1e-13);
    }

    #[test]
    fn divergence_is_reported() {
        let g = Grid::periodic_1d(128).unwrap();
        let eta = Field::from_fn(&g, |x| 1.5 * x[0].cos()).unwrap();
        let f = Field::from_fn(&g, |x| (5.0 * x[0]).cos()).unwrap();
        let err = series_dn(&eta, &f, None, &SeriesConfig::default()).unwrap_err();
        match err {
            Error::SeriesDivergence { term_norms } => assert_eq!(term_norms.len(), 17),
            e => panic!("unexpected {e}"),
        }
    }
}
