use crate::domain::{Grid, RegionMask};

/// Scalar function sampled on the space–time grid, stored level by level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n_x: usize,
    n_t: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self::zeros_dims(grid.n_x, grid.n_t)
    }

    pub fn zeros_dims(n_x: usize, n_t: usize) -> Self {
        Field {
            n_x,
            n_t,
            values: vec![0.0; (n_t + 1) * (n_x + 2)],
        }
    }

    /// Samples `f(t, x)` at interior nodes; boundary columns stay zero.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for n in 0..grid.n_levels() {
            let t = grid.t[n];
            let row = field.level_mut(n);
            for i in 1..=grid.n_x {
                row[i] = f(t, grid.x[i]);
            }
        }
        field
    }

    pub fn from_values(n_x: usize, n_t: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), (n_t + 1) * (n_x + 2), "field shape mismatch");
        Field { n_x, n_t, values }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_nodes(&self) -> usize {
        self.n_x + 2
    }

    pub fn fits(&self, grid: &Grid) -> bool {
        self.n_x == grid.n_x && self.n_t == grid.n_t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn level(&self, n: usize) -> &[f64] {
        let w = self.n_nodes();
        &self.values[n * w..(n + 1) * w]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [f64] {
        let w = self.n_nodes();
        &mut self.values[n * w..(n + 1) * w]
    }

    pub fn set_level(&mut self, n: usize, data: &[f64]) {
        self.level_mut(n).copy_from_slice(data);
    }

    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.values[n * self.n_nodes() + i]
    }

    pub fn set(&mut self, n: usize, i: usize, v: f64) {
        let w = self.n_nodes();
        self.values[n * w + i] = v;
    }

    /// Terminal slice `z(T, ·)`.
    pub fn terminal(&self) -> &[f64] {
        self.level(self.n_t)
    }

    pub fn initial(&self) -> &[f64] {
        self.level(0)
    }

    /// Zeroes the Dirichlet columns.
    pub fn clamp_boundary(&mut self) {
        let last = self.n_x + 1;
        for n in 0..=self.n_t {
            let row = self.level_mut(n);
            row[0] = 0.0;
            row[last] = 0.0;
        }
    }

    pub fn boundary_is_zero(&self) -> bool {
        (0..=self.n_t).all(|n| {
            let row = self.level(n);
            row[0] == 0.0 && row[self.n_x + 1] == 0.0
        })
    }

    /// Re-indexes a backward trajectory onto source levels: level `n`
    /// receives level `n-1` for `n ≥ 1`, level 0 is zero.
    pub fn to_source_levels(&self) -> Field {
        let w = self.n_nodes();
        let mut out = Field::zeros_dims(self.n_x, self.n_t);
        out.values[w..].copy_from_slice(&self.values[..self.n_t * w]);
        out
    }

    /// Restricts to source levels `1..=n_t` and to the nodes of `mask`.
    pub fn masked_source(&self, mask: &RegionMask) -> Field {
        let mut out = self.clone();
        out.level_mut(0).fill(0.0);
        for n in 1..=self.n_t {
            for (v, &inside) in out.level_mut(n).iter_mut().zip(&mask.indicator) {
                if !inside {
                    *v = 0.0;
                }
            }
        }
        out
    }

    /// Restricts every level (including level 0) to the nodes of `mask`.
    pub fn masked(&self, mask: &RegionMask) -> Field {
        let mut out = self.clone();
        for n in 0..=self.n_t {
            for (v, &inside) in out.level_mut(n).iter_mut().zip(&mask.indicator) {
                if !inside {
                    *v = 0.0;
                }
            }
        }
        out
    }

    /// State reversal `z(t) ↦ z(T - t)`.
    pub fn reverse_time(&self) -> Field {
        let mut out = Field::zeros_dims(self.n_x, self.n_t);
        for n in 0..=self.n_t {
            out.set_level(n, self.level(self.n_t - n));
        }
        out
    }

    /// Source reversal: the forcing of step `n` moves to step `n_t + 1 - n`.
    pub fn reverse_sources(&self) -> Field {
        let mut out = Field::zeros_dims(self.n_x, self.n_t);
        for n in 1..=self.n_t {
            out.set_level(n, self.level(self.n_t + 1 - n));
        }
        out
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Field {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: f64, other: &Field) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, b: f64, other: &Field) -> Field {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Field {
            n_x: self.n_x,
            n_t: self.n_t,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}
