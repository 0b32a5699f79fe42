use serde::Serialize;

use super::{Grid, RegionMask};
use crate::error::{Error, Result};

/// Auxiliary function `σ(x) = A·x(1-x)·exp(-β(x-c)²)`.
///
/// `c` is shifted off the target so the single critical point of `σ` sits
/// exactly at the midpoint of `ω_0`; `A` normalizes the maximum to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sigma {
    pub beta: f64,
    pub center: f64,
    pub amplitude: f64,
    pub critical_point: f64,
    /// `σ` sampled at every grid node.
    pub nodes: Vec<f64>,
}

const BETAS: [f64; 11] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];

impl Sigma {
    pub fn value(&self, x: f64) -> f64 {
        self.amplitude * x * (1.0 - x) * (-self.beta * (x - self.center).powi(2)).exp()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let envelope = self.amplitude * (-self.beta * (x - self.center).powi(2)).exp();
        envelope * critical_polynomial(x, self.beta, self.center)
    }

    /// `‖σ‖_∞`, attained at the critical point.
    pub fn sup(&self) -> f64 {
        self.value(self.critical_point)
    }
}

/// `σ'(x)` divided by the (positive) exponential envelope.
fn critical_polynomial(x: f64, beta: f64, center: f64) -> f64 {
    (1.0 - 2.0 * x) - 2.0 * beta * (x - center) * x * (1.0 - x)
}

fn sign_changes(beta: f64, center: f64) -> usize {
    const SCAN: usize = 20_000;
    let mut prev = critical_polynomial(0.0, beta, center);
    let mut changes = 0;
    for j in 1..=SCAN {
        let cur = critical_polynomial(j as f64 / SCAN as f64, beta, center);
        if (prev > 0.0 && cur <= 0.0) || (prev < 0.0 && cur >= 0.0) {
            changes += 1;
        }
        prev = cur;
    }
    changes
}

pub fn build_sigma(grid: &Grid, omega_0: &RegionMask) -> Result<Sigma> {
    let (first, last) = omega_0
        .span()
        .ok_or_else(|| Error::region("omega_0 is empty"))?;
    if first <= 1 || last >= grid.n_x {
        return Err(Error::region("omega_0 must stay at least one node away from the boundary"));
    }
    let target = 0.5 * (grid.x[first] + grid.x[last]);

    let mut chosen = None;
    for beta in BETAS {
        let center = target - (1.0 - 2.0 * target) / (2.0 * beta * target * (1.0 - target));
        if sign_changes(beta, center) == 1 {
            chosen = Some((beta, center));
            break;
        }
    }
    let (beta, center) = chosen.ok_or_else(|| {
        Error::Inconsistent(format!("no bump width gives a unique critical point at {target}"))
    })?;

    let amplitude = 1.0 / (target * (1.0 - target) * (-beta * (target - center).powi(2)).exp());
    let mut sigma = Sigma {
        beta,
        center,
        amplitude,
        critical_point: target,
        nodes: Vec::new(),
    };
    sigma.nodes = grid.x.iter().map(|&x| sigma.value(x)).collect();
    sigma.nodes[0] = 0.0;
    sigma.nodes[grid.n_x + 1] = 0.0;

    if let Some(i) = (0..grid.n_nodes()).find(|&i| !omega_0.contains(i) && sigma.derivative(grid.x[i]) == 0.0) {
        return Err(Error::Inconsistent(format!("sigma_x vanishes at node {i} outside omega_0")));
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, Regions};

    fn setup() -> (Grid, Regions) {
        let grid = build_grid(199, 8, 1.0).unwrap();
        let regions = Regions::rasterize(&grid, (0.3, 0.5), (0.25, 0.6), (0.4, 0.8)).unwrap();
        (grid, regions)
    }

    #[test]
    fn vanishes_on_boundary_and_positive_inside() {
        let (grid, regions) = setup();
        let s = build_sigma(&grid, &regions.omega_0).unwrap();
        assert_eq!(s.nodes[0], 0.0);
        assert_eq!(s.nodes[grid.n_x + 1], 0.0);
        assert!(s.value(0.0).abs() < 1e-15 && s.value(1.0).abs() < 1e-15);
        assert!(s.nodes[1..=grid.n_x].iter().all(|&v| v > 0.0));
        assert!((s.sup() - 1.0).abs() < 1e-12);
        assert!(s.nodes.iter().all(|&v| v <= 1.0 + 1e-12));
    }

    #[test]
    fn derivative_nonzero_outside_omega0_by_finite_differences() {
        let (grid, regions) = setup();
        let s = build_sigma(&grid, &regions.omega_0).unwrap();
        let h = 1e-6;
        for i in 0..grid.n_nodes() {
            if regions.omega_0.contains(i) {
                continue;
            }
            let x = grid.x[i];
            let fd = if i == 0 {
                (s.value(x + h) - s.value(x)) / h
            } else if i == grid.n_x + 1 {
                (s.value(x) - s.value(x - h)) / h
            } else {
                (s.value(x + h) - s.value(x - h)) / (2.0 * h)
            };
            assert!(fd.abs() > 1e-6, "node {i}: sigma_x ≈ {fd}");
            assert!((fd - s.derivative(x)).abs() < 1e-4 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn critical_point_inside_omega0() {
        let (grid, regions) = setup();
        let s = build_sigma(&grid, &regions.omega_0).unwrap();
        let (a, b) = regions.omega_0.span().unwrap();
        assert!(s.critical_point > grid.x[a] && s.critical_point < grid.x[b]);
        assert!(s.derivative(s.critical_point).abs() < 1e-12);
    }

    #[test]
    fn boundary_touching_omega0_rejected() {
        let grid = build_grid(19, 4, 1.0).unwrap();
        let mut ind = vec![false; 21];
        ind[1] = true;
        ind[2] = true;
        let m = RegionMask::from_indicator(ind, crate::domain::RegionLabel::Omega0);
        assert!(build_sigma(&grid, &m).is_err());
    }
}
