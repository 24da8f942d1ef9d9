//! Darcy velocity u = -(1/mu) grad phi from a mapped-grid potential.

use super::{DnoResult, MethodReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct VelocityField {
    /// Horizontal components, one array per axis, indexed like the
    /// interior potential (level-major).
    pub horizontal: Vec<Vec<f64>>,
    pub vertical: Vec<f64>,
    /// RMS of the discrete divergence over interior levels.
    pub divergence_norm: f64,
    /// RMS of the normal velocity on the rigid boundary.
    pub bottom_residual: f64,
    /// RMS of sqrt(1+|grad eta|^2) u.n + (1/mu) G(eta) f on the interface.
    pub kinematic_residual: f64,
}

pub fn reconstruct_velocity(result: &DnoResult, mu: f64) -> Result<VelocityField> {
    if !(mu > 0.0) {
        return Err(Error::arg("viscosity must be positive"));
    }
    let int = match (&result.interior, &result.method) {
        (Some(i), MethodReport::Elliptic { .. }) => i,
        _ => {
            return Err(Error::arg(
                "velocity reconstruction needs an interior potential",
            ))
        }
    };
    let st = &int.strip;
    let n = st.grid.len();
    let nz = st.nz;
    let dim = st.grid.dim();
    let psi = &int.psi;

    // velocity in the frame of the solved (lower) problem
    let mut ux = vec![vec![0.0; nz * n]; dim];
    let mut uy = vec![0.0; nz * n];
    for j in 0..nz {
        for i in 0..n {
            let (z, jac) = st.metric(i, st.s[j], st.sp[j]);
            let ps = st.psi_sigma(psi, i, j);
            for a in 0..dim {
                let px = st.psi_x(psi, a, i, j);
                ux[a][j * n + i] = -(px - z[a] / jac * ps) / mu;
            }
            uy[j * n + i] = -(ps / jac) / mu;
        }
    }

    let mut div2 = 0.0;
    let mut count = 0usize;
    for j in 1..nz - 1 {
        for i in 0..n {
            let (z, jac) = st.metric(i, st.s[j], st.sp[j]);
            let mut d = st.psi_sigma(&uy, i, j) / jac;
            for a in 0..dim {
                d += st.psi_x(&ux[a], a, i, j) - z[a] / jac * st.psi_sigma(&ux[a], i, j);
            }
            div2 += d * d;
            count += 1;
        }
    }

    let mut bot2 = 0.0;
    for i in 0..n {
        let gb = st.grad_bottom[i];
        let mut r = uy[i];
        for a in 0..dim {
            r -= gb[a] * ux[a][i];
        }
        bot2 += r * r;
    }

    // G of the solved problem; the upper operator carries the opposite sign
    let sign = if int.reflected { -1.0 } else { 1.0 };
    let top = nz - 1;
    let mut kin2 = 0.0;
    for i in 0..n {
        let (z, _) = st.metric(i, st.s[top], st.sp[top]);
        let k = top * n + i;
        let mut flux = uy[k];
        for a in 0..dim {
            flux -= z[a] * ux[a][k];
        }
        let g = sign * result.boundary_value.values()[i];
        let r = flux + g / mu;
        kin2 += r * r;
    }

    if int.reflected {
        uy.iter_mut().for_each(|v| *v = -*v);
    }

    Ok(VelocityField {
        horizontal: ux,
        vertical: uy,
        divergence_norm: (div2 / count.max(1) as f64).sqrt(),
        bottom_residual: (bot2 / n as f64).sqrt(),
        kinematic_residual: (kin2 / n as f64).sqrt(),
    })
}
