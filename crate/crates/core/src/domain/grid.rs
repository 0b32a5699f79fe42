use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform space–time grid on `[0,T]×[0,1]`.
///
/// Space nodes are `x_i = i·dx` for `i = 0..=n_x+1`; nodes `0` and `n_x+1`
/// carry the Dirichlet condition. Time levels are `t_n = n·dt`, `n = 0..=n_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub n_x: usize,
    pub n_t: usize,
    pub horizon: f64,
    pub dx: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

pub fn build_grid(n_x: usize, n_t: usize, horizon: f64) -> Result<Grid> {
    if n_x == 0 {
        return Err(Error::config("n_x must be positive"));
    }
    if n_t == 0 {
        return Err(Error::config("n_t must be positive"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::config(format!("time horizon must be positive, got {horizon}")));
    }
    let dx = 1.0 / (n_x + 1) as f64;
    let dt = horizon / n_t as f64;
    let mut x: Vec<f64> = (0..n_x + 2).map(|i| i as f64 * dx).collect();
    x[n_x + 1] = 1.0;
    let mut t: Vec<f64> = (0..n_t + 1).map(|n| n as f64 * dt).collect();
    t[n_t] = horizon;
    Ok(Grid {
        n_x,
        n_t,
        horizon,
        dx,
        dt,
        x,
        t,
    })
}

impl Grid {
    /// Number of space nodes including both boundary nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_x + 2
    }

    pub fn n_levels(&self) -> usize {
        self.n_t + 1
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.n_x + 1
    }

    /// Midpoint of the cell `[x_i, x_{i+1}]`.
    pub fn face(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        ((x / self.dx).round().max(0.0) as usize).min(self.n_x + 1)
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.n_x == other.n_x && self.n_t == other.n_t && self.horizon == other.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_matches_counts() {
        let g = build_grid(3, 2, 1.0).unwrap();
        assert_eq!(g.dx, 0.25);
        assert_eq!(g.dt, 0.5);
        assert_eq!(g.x, vec![0.0, 0.25, 0.5, 0.75, 1.0]);

        let g = build_grid(199, 400, 1.0).unwrap();
        assert!((g.dx - 0.005).abs() < 1e-15);
        assert!((g.dt - 0.0025).abs() < 1e-15);
        assert!((g.dx * 200.0 - 1.0).abs() < 1e-14);
        assert_eq!(g.t[400], 1.0);
        assert!(g.x[1..200].iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(matches!(build_grid(0, 10, 1.0), Err(Error::Config(_))));
        assert!(matches!(build_grid(10, 0, 1.0), Err(Error::Config(_))));
        assert!(matches!(build_grid(10, 10, 0.0), Err(Error::Config(_))));
        assert!(matches!(build_grid(10, 10, f64::NAN), Err(Error::Config(_))));
    }
}
