//! Reproducible random data for Monte-Carlo checks.
//!
//! Every sample is drawn from its own generator seeded by
//! [`sample_seed`]`(base, index)`, so results do not depend on the order in
//! which parallel workers pick samples up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::domain::Grid;
use crate::pde::solve_tridiagonal;

/// Lattice points (boundary included) carrying the raw Gaussian values.
pub const LATTICE_POINTS: usize = 33;
/// Physical time step of each smoothing pass.
pub const SMOOTHING_STEP: f64 = 2e-4;

/// Mixes a base seed and a sample index (splitmix64 finalizer).
pub fn sample_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sample_seed(base, index))
}

/// Rough terminal datum: standard normal values on a fixed lattice,
/// linearly interpolated to the grid, smoothed by two implicit heat steps of
/// fixed physical length, then clamped to zero on the boundary.
///
/// The lattice and smoothing length do not depend on the grid, so the
/// distribution of the sampled function is the same under refinement.
pub fn smoothed_gaussian(grid: &Grid, rng: &mut impl Rng) -> Vec<f64> {
    let mut lattice: Vec<f64> = (0..LATTICE_POINTS).map(|_| rng.sample(StandardNormal)).collect();
    lattice[0] = 0.0;
    lattice[LATTICE_POINTS - 1] = 0.0;
    let cells = (LATTICE_POINTS - 1) as f64;
    let mut z: Vec<f64> = grid
        .x
        .iter()
        .map(|&x| {
            let pos = x * cells;
            let j = (pos.floor() as usize).min(LATTICE_POINTS - 2);
            let w = pos - j as f64;
            (1.0 - w) * lattice[j] + w * lattice[j + 1]
        })
        .collect();

    let m = grid.n_x;
    let c = SMOOTHING_STEP / (grid.dx * grid.dx);
    let sub = vec![-c; m];
    let diag = vec![1.0 + 2.0 * c; m];
    let mut scratch = vec![0.0; m];
    for _ in 0..2 {
        let mut rhs = z[1..=m].to_vec();
        solve_tridiagonal(&sub, &diag, &sub, &mut rhs, &mut scratch).expect("diagonally dominant system");
        z[1..=m].copy_from_slice(&rhs);
    }
    z[0] = 0.0;
    z[m + 1] = 0.0;
    z
}

/// Coefficients of `z(x) = x·(c_0 + c_1 x + … + c_d x^d)` with a random
/// degree `d ≤ 5` and standard normal coefficients.
pub fn hardy_polynomial(rng: &mut impl Rng) -> Vec<f64> {
    let degree = rng.random_range(0..=5usize);
    let mut c: Vec<f64> = (0..=degree).map(|_| rng.sample(StandardNormal)).collect();
    if c.iter().all(|&v| v == 0.0) {
        c[0] = 1.0;
    }
    c
}

/// Evaluates `x·P(x)` for coefficients from [`hardy_polynomial`].
pub fn eval_hardy_polynomial(coeffs: &[f64], x: f64) -> f64 {
    x * coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}
