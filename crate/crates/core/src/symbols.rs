//! Symbols a(x, xi) of the Dirichlet-Neumann calculus and a numerical
//! estimator of the seminorms M^m_rho.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{dot, norm2, Field, Grid, Vec2};

pub type SymbolFn = dyn Fn(usize, Vec2) -> f64 + Send + Sync;
pub type MultiplierFn = dyn Fn(Vec2) -> f64 + Send + Sync;

/// One term c(x) m(xi) of a separable symbol.
#[derive(Clone)]
pub struct SeparableTerm {
    pub coeff: Vec<f64>,
    pub multiplier: Arc<MultiplierFn>,
}

/// Real symbol sampled in x on a grid and evaluated pointwise in xi.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    order: f64,
    grid: Grid,
    eval: Arc<SymbolFn>,
    separable: Option<Arc<Vec<SeparableTerm>>>,
    x_independent: bool,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("separable", &self.separable.is_some())
            .finish()
    }
}

impl Symbol {
    pub fn new(
        name: impl Into<String>,
        order: f64,
        grid: &Grid,
        eval: impl Fn(usize, Vec2) -> f64 + Send + Sync + 'static,
    ) -> Symbol {
        Symbol {
            name: name.into(),
            order,
            grid: grid.clone(),
            eval: Arc::new(eval),
            separable: None,
            x_independent: false,
        }
    }

    /// x-independent symbol m(xi).
    pub fn fourier_multiplier(
        name: impl Into<String>,
        order: f64,
        grid: &Grid,
        m: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
    ) -> Symbol {
        let m: Arc<MultiplierFn> = Arc::new(m);
        let m2 = m.clone();
        Symbol {
            name: name.into(),
            order,
            grid: grid.clone(),
            eval: Arc::new(move |_, xi| m2(xi)),
            separable: Some(Arc::new(vec![SeparableTerm {
                coeff: vec![1.0; grid.len()],
                multiplier: m,
            }])),
            x_independent: true,
        }
    }

    /// Symbol sum_j c_j(x) m_j(xi).
    pub fn separable(
        name: impl Into<String>,
        order: f64,
        grid: &Grid,
        terms: Vec<SeparableTerm>,
    ) -> Result<Symbol> {
        if terms.iter().any(|t| t.coeff.len() != grid.len()) {
            return Err(Error::GridMismatch("separable coefficient length".into()));
        }
        let terms = Arc::new(terms);
        let t2 = terms.clone();
        Ok(Symbol {
            name: name.into(),
            order,
            grid: grid.clone(),
            eval: Arc::new(move |i, xi| t2.iter().map(|t| t.coeff[i] * (t.multiplier)(xi)).sum()),
            separable: Some(terms),
            x_independent: false,
        })
    }

    pub fn eval(&self, idx: usize, xi: Vec2) -> f64 {
        (self.eval)(idx, xi)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn separable_terms(&self) -> Option<&[SeparableTerm]> {
        self.separable.as_deref().map(|v| v.as_slice())
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    /// Pointwise product; orders add.
    pub fn product(&self, other: &Symbol) -> Result<Symbol> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("symbol product".into()));
        }
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let mut s = Symbol::new(
            format!("{}*{}", self.name, other.name),
            self.order + other.order,
            &self.grid,
            move |i, xi| a(i, xi) * b(i, xi),
        );
        if let (Some(ta), Some(tb)) = (&self.separable, &other.separable) {
            let mut terms = Vec::with_capacity(ta.len() * tb.len());
            for p in ta.iter() {
                for q in tb.iter() {
                    let (mp, mq) = (p.multiplier.clone(), q.multiplier.clone());
                    terms.push(SeparableTerm {
                        coeff: p.coeff.iter().zip(&q.coeff).map(|(x, y)| x * y).collect(),
                        multiplier: Arc::new(move |xi| mp(xi) * mq(xi)),
                    });
                }
            }
            s.separable = Some(Arc::new(terms));
            s.x_independent = self.x_independent && other.x_independent;
        }
        Ok(s)
    }
}

/// lambda = sqrt((1+|p|^2)|xi|^2 - (p.xi)^2) with p = grad eta.
pub fn lambda_value(p: Vec2, xi: Vec2) -> f64 {
    let q = (1.0 + dot(p, p)) * dot(xi, xi) - dot(p, xi).powi(2);
    q.max(0.0).sqrt()
}

/// ell = (1+|p|^2)^{-1/2} (|xi|^2 - (p.xi)^2 / (1+|p|^2)).
pub fn ell_value(p: Vec2, xi: Vec2) -> f64 {
    let w = 1.0 + dot(p, p);
    (dot(xi, xi) - dot(p, xi).powi(2) / w) / w.sqrt()
}

/// Symbol of the linearized curvature, M(p) with M xi . xi = ell.
pub fn curvature_matrix(p: Vec2) -> [[f64; 2]; 2] {
    let w = 1.0 + dot(p, p);
    let a = w.powf(-0.5);
    let b = w.powf(-1.5);
    [
        [a - b * p[0] * p[0], -b * p[0] * p[1]],
        [-b * p[1] * p[0], a - b * p[1] * p[1]],
    ]
}

/// Product lambda * ell, equal to (1+|p|^2)^{-3/2} lambda^3.
pub fn lambda_ell_value(p: Vec2, xi: Vec2) -> f64 {
    (1.0 + dot(p, p)).powf(-1.5) * lambda_value(p, xi).powi(3)
}

fn surface_gradient(eta: &Field) -> Arc<Vec<Vec2>> {
    let g = eta.gradient();
    let n = eta.grid().len();
    Arc::new(
        (0..n)
            .map(|i| [g[0].values()[i], g.get(1).map_or(0.0, |f| f.values()[i])])
            .collect(),
    )
}

fn weight_power(grad: &[Vec2], power: f64) -> Vec<f64> {
    grad.iter()
        .map(|p| (1.0 + dot(*p, *p)).powf(power))
        .collect()
}

/// lambda(x, xi) for the surface eta. In one dimension this is |xi|.
pub fn lambda_symbol(eta: &Field) -> Symbol {
    let grid = eta.grid();
    if grid.dim() == 1 {
        return Symbol::fourier_multiplier("lambda", 1.0, grid, norm2);
    }
    let p = surface_gradient(eta);
    Symbol::new("lambda", 1.0, grid, move |i, xi| lambda_value(p[i], xi))
}

/// ell(x, xi) = M(grad eta) xi . xi.
pub fn ell_symbol(eta: &Field) -> Symbol {
    let grid = eta.grid();
    let p = surface_gradient(eta);
    let terms = if grid.dim() == 1 {
        vec![SeparableTerm {
            coeff: weight_power(&p, -1.5),
            multiplier: Arc::new(|xi: Vec2| xi[0] * xi[0]),
        }]
    } else {
        let m: Vec<[[f64; 2]; 2]> = p.iter().map(|q| curvature_matrix(*q)).collect();
        vec![
            SeparableTerm {
                coeff: m.iter().map(|a| a[0][0]).collect(),
                multiplier: Arc::new(|xi: Vec2| xi[0] * xi[0]),
            },
            SeparableTerm {
                coeff: m.iter().map(|a| 2.0 * a[0][1]).collect(),
                multiplier: Arc::new(|xi: Vec2| xi[0] * xi[1]),
            },
            SeparableTerm {
                coeff: m.iter().map(|a| a[1][1]).collect(),
                multiplier: Arc::new(|xi: Vec2| xi[1] * xi[1]),
            },
        ]
    };
    Symbol::separable("ell", 2.0, grid, terms).expect("coefficients sized from the grid")
}

/// Power (lambda ell)^{q}. Order 3q.
pub fn lambda_ell_power(eta: &Field, q: f64) -> Symbol {
    let grid = eta.grid();
    let p = surface_gradient(eta);
    let name = if q == 1.0 {
        "lambda*ell".to_string()
    } else {
        format!("(lambda*ell)^{q}")
    };
    if grid.dim() == 1 {
        let terms = vec![SeparableTerm {
            coeff: weight_power(&p, -1.5 * q),
            multiplier: Arc::new(move |xi: Vec2| xi[0].abs().powf(3.0 * q)),
        }];
        return Symbol::separable(name, 3.0 * q, grid, terms).expect("sized from grid");
    }
    Symbol::new(name, 3.0 * q, grid, move |i, xi| {
        let v = lambda_ell_value(p[i], xi);
        if v == 0.0 {
            0.0
        } else {
            v.powf(q)
        }
    })
}

pub fn lambda_ell_symbol(eta: &Field) -> Symbol {
    lambda_ell_power(eta, 1.0)
}

#[derive(Debug, Clone)]
pub struct SeminormEstimate {
    pub value: f64,
    pub m: f64,
    pub rho: f64,
    /// Largest |xi| sampled.
    pub radius: f64,
    /// Contribution of each multi-index alpha.
    pub per_alpha: Vec<([usize; 2], f64)>,
}

/// Estimates M^m_rho(a) = sup_{|alpha|<=2} sup_{|xi|>=1/2} (1+|xi|)^{|alpha|-m}
/// ||d_xi^alpha a(., xi)||_{W^{rho,infty}} by sampling xi on dyadic shells up
/// to `radius` and differentiating in xi by central differences.
///
/// This is a lower estimate of the true supremum; it is nondecreasing in
/// `radius`.
pub fn symbol_seminorm(sym: &Symbol, m: f64, rho: f64, radius: f64) -> Result<SeminormEstimate> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::arg(format!("rho = {rho} outside [0, 1]")));
    }
    if !m.is_finite() || !(radius.is_finite() && radius > 0.0) {
        return Err(Error::arg("order and radius must be finite, radius > 0"));
    }
    let grid = sym.grid();
    let dim = grid.dim();
    let dirs: Vec<Vec2> = if dim == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        (0..16)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / 16.0;
                [t.cos(), t.sin()]
            })
            .collect()
    };
    // Symbols are only controlled on |xi| >= 1/2.
    let mut radii = Vec::new();
    let mut r = 0.5;
    while r < radius {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(radius);

    let alphas: Vec<[usize; 2]> = if dim == 1 {
        vec![[0, 0], [1, 0], [2, 0]]
    } else {
        vec![[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    };

    let n = grid.len();
    let mut per_alpha: Vec<([usize; 2], f64)> = alphas.iter().map(|a| (*a, 0.0)).collect();
    let mut buf = vec![0.0; n];
    for &rad in &radii {
        for d in &dirs {
            let xi = [rad * d[0], rad * d[1]];
            let h = 1e-3 * rad.max(1.0);
            for (k, alpha) in alphas.iter().enumerate() {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = xi_derivative(sym, i, xi, *alpha, h);
                }
                let order = (alpha[0] + alpha[1]) as f64;
                let w = (1.0 + rad).powf(order - m);
                let val = w * holder_norm(grid, &buf, rho);
                if !val.is_finite() {
                    return Err(Error::non_finite(format!("seminorm of {}", sym.name())));
                }
                per_alpha[k].1 = per_alpha[k].1.max(val);
            }
        }
    }
    let value = per_alpha.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(SeminormEstimate {
        value,
        m,
        rho,
        radius,
        per_alpha,
    })
}

fn xi_derivative(sym: &Symbol, i: usize, xi: Vec2, alpha: [usize; 2], h: f64) -> f64 {
    let f = |dx: f64, dy: f64| sym.eval(i, [xi[0] + dx, xi[1] + dy]);
    match alpha {
        [0, 0] => f(0.0, 0.0),
        [1, 0] => (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h),
        [0, 1] => (f(0.0, h) - f(0.0, -h)) / (2.0 * h),
        [2, 0] => (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h),
        [0, 2] => (f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h),
        [1, 1] => (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h),
        _ => unreachable!("|alpha| <= 2"),
    }
}

/// sup |g| plus, for rho > 0, the discrete Holder quotient. In one
/// dimension all pairs are compared; in two dimensions pairs along each
/// axis.
fn holder_norm(grid: &Grid, g: &[f64], rho: f64) -> f64 {
    let sup = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if rho == 0.0 {
        return sup;
    }
    let mut q = 0.0f64;
    for a in 0..grid.dim() {
        let na = grid.n()[a];
        let dx = grid.spacing(a);
        for s in 1..=na / 2 {
            let dist = (s as f64 * dx).powf(rho);
            for (i, gi) in g.iter().enumerate() {
                let j = grid.shift(i, a, s as i64);
                q = q.max((gi - g[j]).abs() / dist);
            }
        }
    }
    sup + q
}
