use super::{DiffusionCoefficient, Grid};
use crate::error::{Error, Result};

/// Hardy–Poincaré constant `4/(1-θ)²`.
pub fn hardy_bound(theta: f64) -> f64 {
    4.0 / (1.0 - theta).powi(2)
}

/// `∫ (k/x²) z² dx / ∫ k z_x² dx` for a node vector `z` with `z(0) = 0`.
///
/// Both integrals use the cell-midpoint rule, so `k/x²` is never evaluated
/// at `x = 0`; `z` at the midpoint is the average of its two end values.
pub fn hardy_poincare_ratio(grid: &Grid, z: &[f64], k: &DiffusionCoefficient) -> Result<f64> {
    if z.len() != grid.n_nodes() {
        return Err(Error::config(format!(
            "node vector has {} entries, grid has {}",
            z.len(),
            grid.n_nodes()
        )));
    }
    if z[0] != 0.0 {
        return Err(Error::config(format!("z(0) must vanish, got {}", z[0])));
    }
    let dx = grid.dx;
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..grid.n_x + 1 {
        let xm = grid.face(c);
        let km = k.k(xm);
        let zm = 0.5 * (z[c] + z[c + 1]);
        let dz = (z[c + 1] - z[c]) / dx;
        num += km / (xm * xm) * zm * zm;
        den += km * dz * dz;
    }
    if den == 0.0 {
        return Err(Error::UndefinedRatio("∫ k z_x² vanishes".into()));
    }
    Ok(num / den)
}
