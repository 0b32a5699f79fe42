//! Dense space–time oracles.
//!
//! Every unknown of every coupled field at every time level goes into one
//! matrix, assembled directly from `k(x) = x^α` and a constant `a0` and
//! solved by LU. Nothing here calls the library's time steppers or its
//! operator assembly, so agreement with the library is a real check.

#![allow(dead_code, clippy::needless_range_loop)]

use hierctrl_core::domain::{build_grid, make_power_diffusion, Grid, RegionMask, Regions};
use hierctrl_core::pde::{Field, Potential};
use hierctrl_core::Model;
use nalgebra::{DMatrix, DVector};

/// Small-grid regions wide enough for the 8-node intersection rule.
pub const WIDE_OMEGA: (f64, f64) = (0.15, 0.9);
pub const WIDE_CONTROL: (f64, f64) = (0.05, 0.95);
pub const WIDE_OBSERVE: (f64, f64) = (0.1, 0.95);

pub const REF_OMEGA: (f64, f64) = (0.3, 0.5);
pub const REF_CONTROL: (f64, f64) = (0.25, 0.6);
pub const REF_OBSERVE: (f64, f64) = (0.4, 0.8);

pub fn small_model(n_x: usize, n_t: usize, alpha: f64, a0: f64) -> Model {
    let grid = build_grid(n_x, n_t, 1.0).unwrap();
    let regions = Regions::rasterize(&grid, WIDE_OMEGA, WIDE_CONTROL, WIDE_OBSERVE).unwrap();
    Model::new(grid, make_power_diffusion(alpha).unwrap(), Potential::Constant(a0), regions).unwrap()
}

pub fn reference_model(n_x: usize, n_t: usize) -> Model {
    let grid = build_grid(n_x, n_t, 1.0).unwrap();
    let regions = Regions::rasterize(&grid, REF_OMEGA, REF_CONTROL, REF_OBSERVE).unwrap();
    Model::new(grid, make_power_diffusion(0.5).unwrap(), Potential::Constant(1.0), regions).unwrap()
}

/// Gaussian bump at 0.6 of width 0.1 switched off after `T/2`, on `O_d`.
pub fn reference_target(model: &Model) -> Field {
    Field::from_fn(&model.grid, |t, x| {
        if t <= 0.5 {
            (-(x - 0.6f64).powi(2) / 0.01).exp()
        } else {
            0.0
        }
    })
    .masked(&model.regions.observe)
}

/// `dt·dx·Σ_{n≥1} Σ_{i∈mask} a b`, written out independently.
pub fn oracle_source_inner(grid: &Grid, a: &Field, b: &Field, mask: Option<&RegionMask>) -> f64 {
    let mut acc = 0.0;
    for n in 1..=grid.n_t {
        for i in 1..=grid.n_x {
            if mask.is_none_or(|m| m.contains(i)) {
                acc += a.get(n, i) * b.get(n, i);
            }
        }
    }
    acc * grid.dt * grid.dx
}

/// Dense `I + dt·L` on interior nodes.
pub fn step_matrix(n_x: usize, n_t: usize, horizon: f64, alpha: f64, a0: f64) -> DMatrix<f64> {
    let dx = 1.0 / (n_x + 1) as f64;
    let dt = horizon / n_t as f64;
    let k = |j: usize| ((j as f64 + 0.5) * dx).powf(alpha);
    DMatrix::from_fn(n_x, n_x, |r, c| {
        let (kl, kr) = (k(r), k(r + 1));
        if r == c {
            1.0 + dt * ((kl + kr) / (dx * dx) + a0)
        } else if c + 1 == r {
            -dt * kl / (dx * dx)
        } else if r + 1 == c {
            -dt * kr / (dx * dx)
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Unknown levels `1..=n_t`; the datum sits at level 0.
    Forward,
    /// Unknown levels `0..n_t`; the datum sits at level `n_t`.
    Backward,
}

#[derive(Debug, Clone)]
enum Datum {
    Zero,
    Known(Vec<f64>),
    /// `c` times another field at the same end level.
    Coupled(usize, f64),
}

/// Monolithic system for a set of implicit-Euler fields coupled through
/// their sources and end data.
pub struct Monolithic {
    n_x: usize,
    n_t: usize,
    dt: f64,
    kinds: Vec<Kind>,
    data: Vec<Datum>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Monolithic {
    pub fn new(model: &Model, alpha: f64, a0: f64, kinds: &[Kind]) -> Self {
        let g = &model.grid;
        let (m, nt) = (g.n_x, g.n_t);
        let block = m * nt;
        let size = block * kinds.len();
        let step = step_matrix(m, nt, g.horizon, alpha, a0);
        let mut sys = Monolithic {
            n_x: m,
            n_t: nt,
            dt: g.dt,
            kinds: kinds.to_vec(),
            data: vec![Datum::Zero; kinds.len()],
            a: DMatrix::zeros(size, size),
            b: DVector::zeros(size),
        };
        for f in 0..kinds.len() {
            for n in 1..=nt {
                let (own, prev) = match kinds[f] {
                    Kind::Forward => (n, n - 1),
                    Kind::Backward => (n - 1, n),
                };
                for r in 0..m {
                    let row = sys.row(f, n, r + 1);
                    for c in 0..m {
                        if step[(r, c)] != 0.0 {
                            let col = sys.idx(f, own, c + 1).unwrap();
                            sys.a[(row, col)] += step[(r, c)];
                        }
                    }
                    if let Some(col) = sys.idx(f, prev, r + 1) {
                        sys.a[(row, col)] -= 1.0;
                    }
                }
            }
        }
        sys
    }

    /// Column of field `f` at level `n`, node `i`, if that value is unknown.
    fn idx(&self, f: usize, n: usize, i: usize) -> Option<usize> {
        let stored = match self.kinds[f] {
            Kind::Forward => (1..=self.n_t).contains(&n).then(|| n - 1),
            Kind::Backward => (n < self.n_t).then_some(n),
        }?;
        Some(f * self.n_x * self.n_t + stored * self.n_x + (i - 1))
    }

    /// Row of the step-`n` equation of field `f` at node `i`.
    fn row(&self, f: usize, n: usize, i: usize) -> usize {
        let lvl = match self.kinds[f] {
            Kind::Forward => n,
            Kind::Backward => n - 1,
        };
        self.idx(f, lvl, i).unwrap()
    }

    /// Row receiving the end datum: step 1 for forward, step `n_t` backward.
    fn datum_step(&self, f: usize) -> usize {
        match self.kinds[f] {
            Kind::Forward => 1,
            Kind::Backward => self.n_t,
        }
    }

    pub fn datum(&mut self, f: usize, values: &[f64]) {
        let n = self.datum_step(f);
        for i in 1..=self.n_x {
            let row = self.row(f, n, i);
            self.b[row] += values[i];
        }
        self.data[f] = Datum::Known(values.to_vec());
    }

    /// End datum of `f` equals `c` times `other` at the same end level.
    pub fn datum_from(&mut self, f: usize, other: usize, c: f64) {
        let n = self.datum_step(f);
        let lvl = match self.kinds[f] {
            Kind::Forward => 0,
            Kind::Backward => self.n_t,
        };
        for i in 1..=self.n_x {
            let row = self.row(f, n, i);
            let col = self.idx(other, lvl, i).expect("coupled datum must be an unknown");
            self.a[(row, col)] -= c;
        }
        self.data[f] = Datum::Coupled(other, c);
    }

    /// Adds `c·χ_mask·other` to the source of `f`; with `shift` the source
    /// at level `n` reads `other` at level `n-1`.
    pub fn source(&mut self, f: usize, other: usize, c: f64, mask: &RegionMask, shift: bool) {
        for n in 1..=self.n_t {
            let lvl = if shift { n - 1 } else { n };
            for i in mask.nodes() {
                let row = self.row(f, n, i);
                let col = self.idx(other, lvl, i).expect("source level must be an unknown");
                self.a[(row, col)] -= self.dt * c;
            }
        }
    }

    /// Adds the known source `c·χ_mask·g` (levels `1..=n_t`).
    pub fn known_source(&mut self, f: usize, g: &Field, c: f64, mask: Option<&RegionMask>) {
        for n in 1..=self.n_t {
            for i in 1..=self.n_x {
                if mask.is_none_or(|m| m.contains(i)) {
                    let row = self.row(f, n, i);
                    self.b[row] += self.dt * c * g.get(n, i);
                }
            }
        }
    }

    pub fn solve(&self) -> Vec<Field> {
        let sol = self.a.clone().lu().solve(&self.b).expect("oracle system is singular");
        let mut fields: Vec<Field> = (0..self.kinds.len())
            .map(|f| {
                let mut out = Field::zeros_dims(self.n_x, self.n_t);
                for n in 0..=self.n_t {
                    for i in 1..=self.n_x {
                        if let Some(c) = self.idx(f, n, i) {
                            out.set(n, i, sol[c]);
                        }
                    }
                }
                out
            })
            .collect();
        for f in 0..self.kinds.len() {
            let lvl = match self.kinds[f] {
                Kind::Forward => 0,
                Kind::Backward => self.n_t,
            };
            let values: Vec<f64> = match &self.data[f] {
                Datum::Zero => vec![0.0; self.n_x + 2],
                Datum::Known(v) => v.clone(),
                Datum::Coupled(o, c) => fields[*o].level(lvl).iter().map(|v| c * v).collect(),
            };
            for i in 1..=self.n_x {
                fields[f].set(lvl, i, values[i]);
            }
        }
        fields
    }
}

/// `z_t + Lz = f`, `z(0) = g` through the dense system.
pub fn oracle_forward(model: &Model, alpha: f64, a0: f64, g: &[f64], f: &Field) -> Field {
    let mut sys = Monolithic::new(model, alpha, a0, &[Kind::Forward]);
    sys.datum(0, g);
    sys.known_source(0, f, 1.0, None);
    sys.solve().remove(0)
}

/// `-w_t + Lw = u`, `w(T) = w_T` through the dense system.
pub fn oracle_backward(model: &Model, alpha: f64, a0: f64, w_t: &[f64], u: &Field) -> Field {
    let mut sys = Monolithic::new(model, alpha, a0, &[Kind::Backward]);
    sys.datum(0, w_t);
    sys.known_source(0, u, 1.0, None);
    sys.solve().remove(0)
}

/// Follower optimality system `y, S, p, q` with `v = -q/μ` eliminated.
/// Returns `(v, [y, S, p, q])`.
pub fn oracle_follower(
    model: &Model,
    alpha: f64,
    a0: f64,
    h: &Field,
    z_d: &Field,
    gamma: f64,
    mu: f64,
) -> (Field, Vec<Field>) {
    let r = &model.regions;
    let c = 1.0 / gamma.sqrt();
    let (y, s, p, q) = (0, 1, 2, 3);
    let mut sys = Monolithic::new(model, alpha, a0, &[Kind::Forward, Kind::Backward, Kind::Forward, Kind::Backward]);
    sys.source(y, q, -1.0 / mu, &r.control, true);
    sys.known_source(y, h, 1.0, Some(&r.omega));
    sys.source(s, y, 1.0, &r.observe, false);
    sys.datum_from(p, s, c);
    sys.source(q, y, 1.0, &r.observe, false);
    sys.source(q, p, c, &r.observe, false);
    sys.known_source(q, z_d, -1.0, Some(&r.observe));
    let fields = sys.solve();
    let v = fields[q].to_source_levels().masked_source(&r.control).scaled(-1.0 / mu);
    (v, fields)
}

/// Adjoint quartet `φ, ζ, ψ, ρ` for terminal datum `ρ_T`.
pub fn oracle_quartet(model: &Model, alpha: f64, a0: f64, rho_t: &[f64], gamma: f64, mu: f64) -> Vec<Field> {
    let r = &model.regions;
    let c = 1.0 / gamma.sqrt();
    let (phi, zeta, psi, rho) = (0, 1, 2, 3);
    let mut sys = Monolithic::new(model, alpha, a0, &[Kind::Forward, Kind::Backward, Kind::Forward, Kind::Backward]);
    sys.source(phi, rho, -1.0 / mu, &r.control, true);
    sys.source(zeta, phi, c, &r.observe, false);
    sys.datum_from(psi, zeta, c);
    sys.source(rho, psi, 1.0, &r.observe, false);
    sys.source(rho, phi, 1.0, &r.observe, false);
    sys.datum(rho, rho_t);
    sys.solve()
}

/// Full leader optimality system: follower chain driven by `h = ρχ_ω` and
/// the quartet with `ρ(T) = -y(T)/ε`. Returns `h`.
pub fn oracle_leader(model: &Model, alpha: f64, a0: f64, z_d: &Field, gamma: f64, mu: f64, epsilon: f64) -> Field {
    use Kind::{Backward as B, Forward as F};
    let r = &model.regions;
    let c = 1.0 / gamma.sqrt();
    let (y, s, p, q, phi, zeta, psi, rho) = (0, 1, 2, 3, 4, 5, 6, 7);
    let mut sys = Monolithic::new(model, alpha, a0, &[F, B, F, B, F, B, F, B]);
    sys.source(y, q, -1.0 / mu, &r.control, true);
    sys.source(y, rho, 1.0, &r.omega, true);
    sys.source(s, y, 1.0, &r.observe, false);
    sys.datum_from(p, s, c);
    sys.source(q, y, 1.0, &r.observe, false);
    sys.source(q, p, c, &r.observe, false);
    sys.known_source(q, z_d, -1.0, Some(&r.observe));
    sys.source(phi, rho, -1.0 / mu, &r.control, true);
    sys.source(zeta, phi, c, &r.observe, false);
    sys.datum_from(psi, zeta, c);
    sys.source(rho, psi, 1.0, &r.observe, false);
    sys.source(rho, phi, 1.0, &r.observe, false);
    sys.datum_from(rho, y, -1.0 / epsilon);
    let fields = sys.solve();
    fields[rho].to_source_levels().masked_source(&r.omega)
}

/// Reference leader control for the follower sweeps: `sin(3t)·x` on `ω`.
pub fn reference_leader_control(model: &Model) -> Field {
    Field::from_fn(&model.grid, |t, x| (3.0 * t).sin() * x).masked_source(&model.regions.omega)
}

pub const GAMMAS: [f64; 4] = [1.0, 1e-1, 1e-2, 1e-3];
pub const EPSILONS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Follower γ-sweep on the 100×200 reference problem with `μ = 10`.
pub fn reference_gamma_sweep() -> hierctrl_core::follower::GammaSweep {
    use hierctrl_core::follower::{gamma_sweep, FollowerProblem};
    let model = reference_model(100, 200);
    let prob = FollowerProblem::new(
        &model,
        reference_leader_control(&model),
        reference_target(&model),
        GAMMAS[0],
        10.0,
    )
    .unwrap();
    gamma_sweep(&prob, &GAMMAS, 1e-10, 2000).unwrap()
}

/// Leader ε-sweep on the 100×200 reference problem, `μ = 10`, `γ = 1`.
pub fn reference_eps_sweep() -> hierctrl_core::leader::EpsilonSweep {
    use hierctrl_core::follower::FollowerProblem;
    use hierctrl_core::leader::{epsilon_sweep, LeaderProblem};
    let model = reference_model(100, 200);
    let follower = FollowerProblem::new(&model, Field::zeros(&model.grid), reference_target(&model), 1.0, 10.0).unwrap();
    let prob = LeaderProblem::new(follower, EPSILONS[0], 1e-12, 1e-13, 1.0).unwrap();
    epsilon_sweep(&prob, &EPSILONS, 1e-8, 2000).unwrap()
}

/// Carleman parameter used for the empirical inequality constants.
pub const VERIFY_S: f64 = 1e-5;
pub const VERIFY_SEED: u64 = 7;

/// Caccioppoli and observability maxima for one grid and sample count.
/// The Caccioppoli sets are fixed physical intervals so that refining the
/// grid does not move them.
pub struct QuartetConstants {
    pub caccioppoli: hierctrl_core::verify::InequalityReport,
    pub observability: hierctrl_core::verify::InequalityReport,
}

pub fn quartet_constants(n_x: usize, n_t: usize, samples: usize) -> QuartetConstants {
    use hierctrl_core::domain::{build_sigma, build_weights, carleman_parameters, RegionLabel};
    use hierctrl_core::leader::QuartetSettings;
    use hierctrl_core::verify::{check_caccioppoli, check_observability, quartet_samples};
    let model = reference_model(n_x, n_t);
    let sigma = build_sigma(&model.grid, &model.regions.omega_0).unwrap();
    let params = carleman_parameters(&model.diffusion, sigma.sup()).unwrap();
    let weights = build_weights(&model.grid, &model.diffusion, &sigma, &params, VERIFY_S).unwrap();
    let set = QuartetSettings::new(10.0, 1.0, 1e-10, 1.0).unwrap();
    let qs = quartet_samples(&model, &set, samples, VERIFY_SEED).unwrap();
    let omega_1 = RegionMask::from_interval(&model.grid, 0.41, 0.49, RegionLabel::Omega1).unwrap();
    let omega_prime = RegionMask::from_interval(&model.grid, 0.42, 0.48, RegionLabel::Omega0).unwrap();
    QuartetConstants {
        caccioppoli: check_caccioppoli(&model, &qs, &weights, &omega_prime, &omega_1).unwrap(),
        observability: check_observability(&model, &qs, &weights).unwrap(),
    }
}

/// Largest relative change of the maximum against the baseline.
pub fn worst_drift(base: f64, others: &[f64]) -> f64 {
    others.iter().fold(0.0f64, |m, &o| m.max((o - base).abs() / base))
}

/// Manufactured solution `e^{-t}x^{3/2}(1-x)` for `k = √x`, `a0 = 1`.
pub fn exact(t: f64, x: f64) -> f64 {
    (-t).exp() * x.powf(1.5) * (1.0 - x)
}

pub fn source(t: f64, x: f64) -> f64 {
    (-t).exp() * (5.0 * x - 1.5)
}

/// `e^{-t}x²(1-x)`, regular enough for the full second order.
pub fn smooth_exact(t: f64, x: f64) -> f64 {
    (-t).exp() * x * x * (1.0 - x)
}

pub fn smooth_source(t: f64, x: f64) -> f64 {
    (-t).exp() * (7.5 * x.powf(1.5) - 3.0 * x.sqrt())
}

/// Max-norm error of a manufactured solution (`k = √x`, `a0 = 1`) over all
/// levels.
pub fn manufactured_error(n_x: usize, n_t: usize, y: fn(f64, f64) -> f64, f: fn(f64, f64) -> f64) -> f64 {
    let grid = build_grid(n_x, n_t, 1.0).unwrap();
    let op = hierctrl_core::pde::assemble_operator(&grid, &make_power_diffusion(0.5).unwrap(), Potential::Constant(1.0)).unwrap();
    let src = Field::from_fn(&grid, f);
    let g: Vec<f64> = grid.x.iter().map(|&x| y(0.0, x)).collect();
    let z = hierctrl_core::pde::solve_forward(&op, &g, Some(&src)).unwrap();
    z.max_abs_diff(&Field::from_fn(&grid, y))
}

pub fn orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

