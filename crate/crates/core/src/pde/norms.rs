use serde::Serialize;

use super::{Field, ParabolicOperator};
use crate::domain::{Grid, RegionMask};

/// Quadrature in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeRule {
    #[default]
    Trapezoid,
    /// Right rectangle over levels `1..=n_t`, the rule the implicit scheme
    /// and the control functionals are built on.
    Implicit,
}

/// Squared norms of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    /// `‖z‖²_{L²(Q)}`.
    pub l2_q_sq: f64,
    /// `‖z(T)‖²_{L²(Ω)}`.
    pub l2_final_sq: f64,
    /// `∫_0^T ‖√k z_x‖² dt`.
    pub grad_k_sq: f64,
}

impl Norms {
    /// `‖z‖²_{L²(0,T;H¹_k)}`.
    pub fn h1k_sq(&self) -> f64 {
        self.l2_q_sq + self.grad_k_sq
    }
}

/// Trapezoidal `L²(Ω)` product of two node vectors.
pub fn space_inner(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let last = grid.n_x + 1;
    let interior: f64 = (1..=grid.n_x).map(|i| a[i] * b[i]).sum();
    grid.dx * (interior + 0.5 * (a[0] * b[0] + a[last] * b[last]))
}

/// `∫∫ χ a b` over source levels `1..=n_t` (right rectangle in time).
pub fn source_inner(grid: &Grid, a: &Field, b: &Field, mask: Option<&RegionMask>) -> f64 {
    let mut acc = 0.0;
    for n in 1..=grid.n_t {
        let (ra, rb) = (a.level(n), b.level(n));
        acc += match mask {
            None => (1..=grid.n_x).map(|i| ra[i] * rb[i]).sum::<f64>(),
            Some(m) => m.nodes().map(|i| ra[i] * rb[i]).sum::<f64>(),
        };
    }
    acc * grid.dt * grid.dx
}

pub fn source_norm_sq(grid: &Grid, a: &Field, mask: Option<&RegionMask>) -> f64 {
    source_inner(grid, a, a, mask)
}

fn time_weights(grid: &Grid, rule: TimeRule) -> Vec<f64> {
    let mut w = vec![grid.dt; grid.n_levels()];
    match rule {
        TimeRule::Trapezoid => {
            w[0] *= 0.5;
            w[grid.n_t] *= 0.5;
        }
        TimeRule::Implicit => w[0] = 0.0,
    }
    w
}

fn grad_k_level(op: &ParabolicOperator, z: &[f64]) -> f64 {
    let dx = op.grid.dx;
    op.k_faces
        .iter()
        .enumerate()
        .map(|(j, &kf)| {
            let d = (z[j + 1] - z[j]) / dx;
            kf * d * d
        })
        .sum::<f64>()
        * dx
}

pub fn norms(op: &ParabolicOperator, z: &Field, rule: TimeRule) -> Norms {
    let grid = &op.grid;
    let w = time_weights(grid, rule);
    let mut l2 = 0.0;
    let mut grad = 0.0;
    for n in 0..grid.n_levels() {
        if w[n] == 0.0 {
            continue;
        }
        let row = z.level(n);
        l2 += w[n] * space_inner(grid, row, row);
        grad += w[n] * grad_k_level(op, row);
    }
    Norms {
        l2_q_sq: l2,
        l2_final_sq: space_inner(grid, z.terminal(), z.terminal()),
        grad_k_sq: grad,
    }
}
