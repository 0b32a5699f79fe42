use super::Field;
use crate::domain::{DiffusionCoefficient, Grid};
use crate::error::{Error, Result};

/// Zeroth-order coefficient `a0`, constant or sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Constant(f64),
    Sampled(Field),
}

impl Potential {
    pub fn at(&self, n: usize, i: usize) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Sampled(f) => f.get(n, i),
        }
    }

    /// `‖a0‖_∞` over interior nodes.
    pub fn sup_norm(&self) -> f64 {
        match self {
            Potential::Constant(c) => c.abs(),
            Potential::Sampled(f) => (0..=f.n_t())
                .flat_map(|n| f.level(n)[1..=f.n_x()].iter().copied())
                .fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Sampled(f) => (0..=f.n_t())
                .flat_map(|n| f.level(n)[1..=f.n_x()].iter().copied())
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match self {
            Potential::Constant(_) => true,
            Potential::Sampled(f) => (1..=f.n_t()).all(|n| f.level(n) == f.level(0)),
        }
    }
}

/// Pre-factorized `I + dt·L^n` for the Thomas sweep.
#[derive(Debug, Clone)]
struct StepFactor {
    sub: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
}

impl StepFactor {
    fn new(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let m = diag.len();
        let mut inv_pivot = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut pivot = diag[0];
        for i in 0..m {
            if i > 0 {
                pivot = diag[i] - sub[i] * upper[i - 1];
            }
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Numerical(format!("singular step matrix (row {i})")));
            }
            inv_pivot[i] = 1.0 / pivot;
            upper[i] = if i + 1 < m { sup[i] * inv_pivot[i] } else { 0.0 };
        }
        Ok(StepFactor {
            sub: sub.to_vec(),
            inv_pivot,
            upper,
        })
    }

    /// Solves in place on the interior part `rhs[1..=m]` of a node vector.
    fn solve(&self, rhs: &mut [f64]) {
        let m = self.inv_pivot.len();
        let x = &mut rhs[1..=m];
        x[0] *= self.inv_pivot[0];
        for i in 1..m {
            x[i] = (x[i] - self.sub[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..m - 1).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
    }
}

/// Discrete `L z = -(k z_x)_x + a0 z` on interior nodes with homogeneous
/// Dirichlet conditions.
///
/// Row `i` (node `x_i`, `1 ≤ i ≤ n_x`):
/// `[k_{i+1/2}(z_i - z_{i+1}) + k_{i-1/2}(z_i - z_{i-1})]/dx² + a0 z_i`,
/// with `k` sampled at cell midpoints so `k(0)` is never evaluated.
#[derive(Debug, Clone)]
pub struct ParabolicOperator {
    pub grid: Grid,
    pub diffusion: DiffusionCoefficient,
    /// `k((j + 1/2) dx)` for `j = 0..=n_x`.
    pub k_faces: Vec<f64>,
    /// Stiffness rows without `a0`, indexed by interior row `i - 1`.
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub a0: Potential,
    factors: Vec<StepFactor>,
}

pub fn assemble_operator(grid: &Grid, k: &DiffusionCoefficient, a0: Potential) -> Result<ParabolicOperator> {
    if let Potential::Sampled(f) = &a0 {
        if !f.fits(grid) {
            return Err(Error::config("a0 field does not match the grid"));
        }
    }
    if !a0.sup_norm().is_finite() {
        return Err(Error::config("a0 must be bounded"));
    }
    if a0.min() <= 0.0 {
        log::warn!(
            "a0 is not bounded below by a positive constant (min {:.3e}); solvability still holds after exponential shift",
            a0.min()
        );
    }
    let m = grid.n_x;
    let dx2 = grid.dx * grid.dx;
    let k_faces: Vec<f64> = (0..=m).map(|j| k.k(grid.face(j))).collect();
    let sub: Vec<f64> = (0..m).map(|r| -k_faces[r] / dx2).collect();
    let sup: Vec<f64> = (0..m).map(|r| -k_faces[r + 1] / dx2).collect();
    let diag: Vec<f64> = (0..m).map(|r| (k_faces[r] + k_faces[r + 1]) / dx2).collect();

    let mut op = ParabolicOperator {
        grid: grid.clone(),
        diffusion: *k,
        k_faces,
        sub,
        diag,
        sup,
        a0,
        factors: Vec::new(),
    };
    let levels: Vec<usize> = if op.a0.is_time_independent() {
        vec![1]
    } else {
        (1..=grid.n_t).collect()
    };
    op.factors = levels
        .into_iter()
        .map(|n| {
            let (s, d, u) = op.step_matrix(n, grid.dt);
            StepFactor::new(&s, &d, &u)
        })
        .collect::<Result<_>>()?;
    Ok(op)
}

impl ParabolicOperator {
    pub fn n_x(&self) -> usize {
        self.grid.n_x
    }

    /// Tridiagonal rows of `I + tau·L^n` (a0 taken at level `n`).
    pub fn step_matrix(&self, n: usize, tau: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.n_x();
        let sub = self.sub.iter().map(|v| tau * v).collect();
        let sup = self.sup.iter().map(|v| tau * v).collect();
        let diag = (0..m)
            .map(|r| 1.0 + tau * (self.diag[r] + self.a0.at(n, r + 1)))
            .collect();
        (sub, diag, sup)
    }

    /// `L^n z` on a node vector; boundary entries of the result are zero.
    pub fn apply(&self, n: usize, z: &[f64]) -> Vec<f64> {
        let m = self.n_x();
        let mut out = vec![0.0; m + 2];
        for i in 1..=m {
            let r = i - 1;
            out[i] = self.sub[r] * z[i - 1] + (self.diag[r] + self.a0.at(n, i)) * z[i] + self.sup[r] * z[i + 1];
        }
        out
    }

    /// Solves `(I + dt·L^n) x = rhs` in place on interior nodes of `rhs`.
    pub(crate) fn solve_step(&self, n: usize, rhs: &mut [f64]) {
        let factor = if self.factors.len() == 1 {
            &self.factors[0]
        } else {
            &self.factors[n - 1]
        };
        factor.solve(rhs);
    }

    /// Dense matrix of `L^n` on interior nodes (row-major), for diagnostics.
    pub fn dense(&self, n: usize) -> Vec<Vec<f64>> {
        let m = self.n_x();
        let mut a = vec![vec![0.0; m]; m];
        for r in 0..m {
            a[r][r] = self.diag[r] + self.a0.at(n, r + 1);
            if r > 0 {
                a[r][r - 1] = self.sub[r];
            }
            if r + 1 < m {
                a[r][r + 1] = self.sup[r];
            }
        }
        a
    }
}
