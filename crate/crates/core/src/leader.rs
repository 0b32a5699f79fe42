//! Penalized null control by the leader.
//!
//! For `ε > 0` the leader minimizes
//! `J_ε(h) = (1/2ε)‖y(T)‖² + ½‖h‖²_{ω×(0,T)}` where `y` is the state driven
//! by `h` and by the follower's low-regret reaction `v^γ(h)`. The gradient
//! is `h - ρ` on `ω`, where `ρ` is the first member of the adjoint quartet
//! `(ρ, ψ, φ, ζ)` with terminal datum `-y(T)/ε`.
//!
//! Given a trial `ρ`, one sweep of the quartet reads
//!
//! ```text
//!  φ_t + Lφ = -ρ χ_O / μ,        φ(0) = 0
//! -ζ_t + Lζ = φ χ_{O_d} / √γ,    ζ(T) = 0
//!  ψ_t + Lψ = 0,                 ψ(0) = ζ(0) / √γ
//! -ρ_t + Lρ = (ψ + φ) χ_{O_d},   ρ(T) = ρ_T
//! ```
//!
//! and the fixed point is found by relaxed Picard iteration.

use rayon::prelude::*;
use serde::Serialize;

use crate::cg::conjugate_gradient;
use crate::domain::WeightSet;
use crate::error::{Error, Result};
use crate::follower::{solve_lowregret, FollowerProblem, FollowerSolution};
use crate::model::Model;
use crate::pde::{solve_backward, solve_forward, source_inner, source_norm_sq, space_inner, Field};

const MAX_RESTARTS: usize = 4;

/// Knobs of the relaxed Picard iteration for the quartet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuartetSettings {
    /// `1/μ`; zero decouples `ρ` from the other three fields.
    pub inv_mu: f64,
    /// `1/√γ`.
    pub inv_sqrt_gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Starting relaxation weight in `(0, 1]`.
    pub relaxation: f64,
    /// Halving stops here.
    pub min_relaxation: f64,
}

impl QuartetSettings {
    pub fn new(mu: f64, gamma: f64, tol: f64, relaxation: f64) -> Result<Self> {
        if !(mu > 0.0) || !(gamma > 0.0) {
            return Err(Error::config("mu and gamma must be positive"));
        }
        if !(tol > 0.0) {
            return Err(Error::config(format!("quartet tolerance must be positive, got {tol}")));
        }
        if !(relaxation > 0.0 && relaxation <= 1.0) {
            return Err(Error::config(format!("relaxation must lie in (0, 1], got {relaxation}")));
        }
        Ok(QuartetSettings {
            inv_mu: 1.0 / mu,
            inv_sqrt_gamma: 1.0 / gamma.sqrt(),
            tol,
            max_iter: 500,
            relaxation,
            min_relaxation: 1.0 / 16.0,
        })
    }

    pub fn decoupled(mut self) -> Self {
        self.inv_mu = 0.0;
        self
    }
}

#[derive(Debug, Clone)]
pub struct AdjointQuartet {
    pub rho: Field,
    pub psi: Field,
    pub phi_adj: Field,
    pub zeta: Field,
    pub fp_iterations: usize,
    /// `‖T(ρ) - ρ‖ / ‖T(ρ)‖` at the returned `ρ`.
    pub fp_residual: f64,
    /// Relaxation weight in use when the iteration stopped.
    pub relaxation: f64,
}

impl AdjointQuartet {
    fn zeros(model: &Model) -> Self {
        let z = Field::zeros(&model.grid);
        AdjointQuartet {
            rho: z.clone(),
            psi: z.clone(),
            phi_adj: z.clone(),
            zeta: z,
            fp_iterations: 0,
            fp_residual: 0.0,
            relaxation: 1.0,
        }
    }

    /// `ϱ = ψ + φ`.
    pub fn varrho(&self) -> Field {
        self.psi.lincomb(1.0, 1.0, &self.phi_adj)
    }

    fn scale(&mut self, a: f64) {
        self.rho.scale(a);
        self.psi.scale(a);
        self.phi_adj.scale(a);
        self.zeta.scale(a);
    }
}

fn field_norm(model: &Model, f: &Field) -> f64 {
    let g = &model.grid;
    (g.dx * g.dt * f.values().iter().map(|v| v * v).sum::<f64>()).sqrt()
}

struct Sweep {
    phi: Field,
    zeta: Field,
    psi: Field,
    rho: Field,
}

fn quartet_sweep(model: &Model, rho: &Field, rho_t: &[f64], set: &QuartetSettings) -> Result<Sweep> {
    let op = &model.op;
    let regions = &model.regions;
    let zero = vec![0.0; model.grid.n_nodes()];
    let phi_src = rho.to_source_levels().masked_source(&regions.control).scaled(-set.inv_mu);
    let phi = solve_forward(op, &zero, Some(&phi_src))?;
    let zeta = solve_backward(op, &zero, Some(&phi.masked_source(&regions.observe).scaled(set.inv_sqrt_gamma)))?;
    let psi0: Vec<f64> = zeta.initial().iter().map(|v| v * set.inv_sqrt_gamma).collect();
    let psi = solve_forward(op, &psi0, None)?;
    let rho_src = psi.lincomb(1.0, 1.0, &phi).masked_source(&regions.observe);
    let rho_next = solve_backward(op, rho_t, Some(&rho_src))?;
    Ok(Sweep {
        phi,
        zeta,
        psi,
        rho: rho_next,
    })
}

/// Solves the quartet for terminal datum `rho_t`.
///
/// The iteration runs on `ρ/‖ρ_T‖`. The weight starts at
/// `set.relaxation` and is halved whenever the fixed-point residual grows,
/// down to `set.min_relaxation`.
pub fn adjoint_quartet_solve(model: &Model, rho_t: &[f64], set: &QuartetSettings) -> Result<AdjointQuartet> {
    if rho_t.len() != model.grid.n_nodes() {
        return Err(Error::config("quartet terminal datum does not match the grid"));
    }
    if !(set.tol > 0.0) {
        return Err(Error::config("quartet tolerance must be positive"));
    }
    let scale = space_inner(&model.grid, rho_t, rho_t).sqrt();
    if scale == 0.0 {
        return Ok(AdjointQuartet::zeros(model));
    }
    let target: Vec<f64> = rho_t.iter().map(|v| v / scale).collect();

    let mut rho = solve_backward(&model.op, &target, None)?;
    let mut omega = set.relaxation;
    let mut prev = f64::INFINITY;
    let mut last = f64::NAN;
    let mut done = 0;
    for k in 1..=set.max_iter {
        done = k;
        let sweep = quartet_sweep(model, &rho, &target, set)?;
        let diff = sweep.rho.lincomb(1.0, -1.0, &rho);
        let size = field_norm(model, &sweep.rho);
        let res = field_norm(model, &diff) / size.max(f64::MIN_POSITIVE);
        // the iterate is normalized by the terminal datum, so a huge
        // norm means the relaxed map is expanding
        if !res.is_finite() || size > 1e12 {
            break;
        }
        last = res;
        if res <= set.tol {
            let mut out = AdjointQuartet {
                rho,
                psi: sweep.psi,
                phi_adj: sweep.phi,
                zeta: sweep.zeta,
                fp_iterations: k,
                fp_residual: res,
                relaxation: omega,
            };
            out.scale(scale);
            return Ok(out);
        }
        if res > prev && omega > set.min_relaxation {
            omega = (0.5 * omega).max(set.min_relaxation);
            log::debug!("quartet residual grew to {res:.3e}; relaxation now {omega}");
        }
        prev = res;
        rho.axpy(omega, &diff);
    }
    Err(Error::NonConvergence {
        solver: "adjoint quartet",
        iterations: done,
        residual: last,
        hint: format!(
            "; coupling too strong for relaxed Picard (relaxation floor {}), increase mu or gamma",
            set.min_relaxation
        ),
    })
}

#[derive(Debug, Clone)]
pub struct LeaderProblem<'a> {
    /// Template for the inner problem; its `h` is ignored.
    pub follower: FollowerProblem<'a>,
    pub epsilon: f64,
    pub follower_tol: f64,
    pub follower_max_iter: usize,
    pub quartet: QuartetSettings,
}

impl<'a> LeaderProblem<'a> {
    pub fn new(follower: FollowerProblem<'a>, epsilon: f64, follower_tol: f64, quartet_tol: f64, relaxation: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(follower_tol > 0.0) {
            return Err(Error::config("follower tolerance must be positive"));
        }
        let regions = &follower.model.regions;
        if regions.omega.intersection(&regions.observe, crate::domain::RegionLabel::Omega).count() == 0 {
            return Err(Error::region("omega and O_d do not intersect"));
        }
        let quartet = QuartetSettings::new(follower.mu, follower.gamma, quartet_tol, relaxation)?;
        Ok(LeaderProblem {
            follower,
            epsilon,
            follower_tol,
            follower_max_iter: 1000,
            quartet,
        })
    }

    pub fn model(&self) -> &'a Model {
        self.follower.model
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(LeaderProblem { epsilon, ..self.clone() })
    }

    fn homogeneous(&self) -> Self {
        let zero = Field::zeros(&self.model().grid);
        LeaderProblem {
            follower: self.follower.with_target(zero),
            ..self.clone()
        }
    }

    fn h_inner(&self, a: &Field, b: &Field) -> f64 {
        source_inner(&self.model().grid, a, b, Some(&self.model().regions.omega))
    }
}

/// `y(T; h, v^γ(h), 0)` together with the follower solution that produced it.
pub fn leader_state_map(h: &Field, prob: &LeaderProblem) -> Result<(Vec<f64>, FollowerSolution)> {
    let fp = prob.follower.with_h(h.masked_source(&prob.model().regions.omega))?;
    let sol = solve_lowregret(&fp, prob.follower_tol, prob.follower_max_iter)?;
    Ok((sol.y.terminal().to_vec(), sol))
}

pub fn eval_j_eps(h: &Field, prob: &LeaderProblem) -> Result<f64> {
    let (y_t, _) = leader_state_map(h, prob)?;
    Ok(j_eps_value(h, &y_t, prob))
}

fn j_eps_value(h: &Field, y_t: &[f64], prob: &LeaderProblem) -> f64 {
    let grid = &prob.model().grid;
    0.5 / prob.epsilon * space_inner(grid, y_t, y_t) + 0.5 * source_norm_sq(grid, h, Some(&prob.model().regions.omega))
}

/// Everything computed along one gradient evaluation.
#[derive(Debug, Clone)]
pub struct LeaderEval {
    pub gradient: Field,
    pub y_terminal: Vec<f64>,
    pub j_eps: f64,
    pub follower: FollowerSolution,
    pub quartet: AdjointQuartet,
}

pub fn evaluate_leader(h: &Field, prob: &LeaderProblem) -> Result<LeaderEval> {
    let omega = &prob.model().regions.omega;
    let h = h.masked_source(omega);
    let (y_t, follower) = leader_state_map(&h, prob)?;
    let rho_t: Vec<f64> = y_t.iter().map(|v| -v / prob.epsilon).collect();
    let quartet = adjoint_quartet_solve(prob.model(), &rho_t, &prob.quartet)?;
    let gradient = h.lincomb(1.0, -1.0, &quartet.rho.to_source_levels()).masked_source(omega);
    Ok(LeaderEval {
        j_eps: j_eps_value(&h, &y_t, prob),
        gradient,
        y_terminal: y_t,
        follower,
        quartet,
    })
}

/// `(h - ρ)χ_ω` with `ρ` from the quartet with terminal datum `-y(T)/ε`.
pub fn grad_j_eps(h: &Field, prob: &LeaderProblem) -> Result<Field> {
    Ok(evaluate_leader(h, prob)?.gradient)
}

#[derive(Debug, Clone, Serialize)]
pub struct LeaderDiagnostics {
    pub epsilon: f64,
    pub norm_h: f64,
    pub norm_y_t: f64,
    pub norm_y_t_sq: f64,
    pub j_eps: f64,
    /// `‖h - ρ‖_{ω×(0,T)}`.
    pub stationarity: f64,
    pub outer_iterations: usize,
    pub follower_iterations: usize,
    pub quartet_iterations: usize,
    /// `‖h‖² + ‖y(T)‖²/ε`.
    pub identity_lhs: f64,
    /// `∫_{O_d×(0,T)} z_d φ`.
    pub identity_rhs: f64,
    pub identity_residual: f64,
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NullControl {
    pub h: Field,
    pub diagnostics: LeaderDiagnostics,
    pub follower: FollowerSolution,
    pub quartet: AdjointQuartet,
}

/// Conjugate gradient on `J_ε` from `h = 0`.
///
/// Stops once `‖h - ρ‖ ≤ tol·min(‖g_0‖, max(1, ‖h‖))`, with `g_0` the
/// gradient at `h = 0`, checked on a fresh evaluation.
pub fn solve_null_control(prob: &LeaderProblem, tol: f64, max_iter: usize) -> Result<NullControl> {
    if !(tol > 0.0) {
        return Err(Error::config(format!("leader tolerance must be positive, got {tol}")));
    }
    let model = prob.model();
    let omega = &model.regions.omega;
    let hom = prob.homogeneous();
    let inner = |a: &Field, b: &Field| prob.h_inner(a, b);
    let apply = |d: &Field| grad_j_eps(d, &hom);

    let mut h = Field::zeros(&model.grid);
    let mut eval = evaluate_leader(&h, prob)?;
    let b = eval.gradient.scaled(-1.0);
    let mut history = vec![eval.j_eps];
    let mut iterations = 0;
    let b_norm = inner(&b, &b).sqrt();
    // relative to the initial gradient, and never looser than `tol` in
    // absolute terms for controls of norm at most one
    let threshold = |h: &Field, t: f64| t * b_norm.min(inner(h, h).sqrt().max(1.0));
    let stationarity_ok = |e: &LeaderEval, h: &Field| inner(&e.gradient, &e.gradient).sqrt() <= threshold(h, tol);

    for restart in 0..=MAX_RESTARTS {
        if stationarity_ok(&eval, &h) {
            break;
        }
        if restart == MAX_RESTARTS {
            return Err(Error::NonConvergence {
                solver: "leader CG",
                iterations,
                residual: inner(&eval.gradient, &eval.gradient).sqrt(),
                hint: " (true stationarity stalled above tolerance)".into(),
            });
        }
        let target = tol * 0.25f64.powi(restart as i32);
        let stop = |x: &Field, r: f64| r <= threshold(x, target);
        let offset = *history.last().unwrap();
        let base = {
            let hh = apply(&h)?;
            0.5 * inner(&h, &hh) - inner(&b, &h)
        };
        let out = conjugate_gradient(apply, &b, h.clone(), inner, stop, max_iter.saturating_sub(iterations), "leader CG")?;
        iterations += out.iterations;
        history.extend(out.objective.iter().skip(1).map(|o| offset + (o - base)));
        h = out.x.masked_source(omega);
        eval = evaluate_leader(&h, prob)?;
    }

    let grid = &model.grid;
    let norm_h_sq = source_norm_sq(grid, &h, Some(omega));
    let norm_y_t_sq = space_inner(grid, &eval.y_terminal, &eval.y_terminal);
    let identity_lhs = norm_h_sq + norm_y_t_sq / prob.epsilon;
    let identity_rhs = source_inner(grid, &prob.follower.z_d, &eval.quartet.phi_adj, Some(&model.regions.observe));
    let scale = identity_lhs.abs().max(identity_rhs.abs());
    let identity_residual = if scale > 0.0 {
        (identity_lhs - identity_rhs).abs() / scale
    } else {
        0.0
    };
    let diagnostics = LeaderDiagnostics {
        epsilon: prob.epsilon,
        norm_h: norm_h_sq.sqrt(),
        norm_y_t: norm_y_t_sq.sqrt(),
        norm_y_t_sq,
        j_eps: eval.j_eps,
        stationarity: inner(&eval.gradient, &eval.gradient).sqrt(),
        outer_iterations: iterations,
        follower_iterations: eval.follower.iterations,
        quartet_iterations: eval.quartet.fp_iterations,
        identity_lhs,
        identity_rhs,
        identity_residual,
        objective_history: history,
    };
    Ok(NullControl {
        h,
        diagnostics,
        follower: eval.follower,
        quartet: eval.quartet,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsRow {
    pub epsilon: f64,
    pub norm_h: f64,
    pub norm_y_t_sq: f64,
    pub j_eps: f64,
    pub outer_iters: usize,
    pub stationarity: f64,
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSweep {
    pub rows: Vec<EpsRow>,
    /// `‖y(T)‖²/√ε` at the largest ε.
    pub fitted_constant: f64,
    /// Each `‖y(T)‖²` at most 5% above its predecessor.
    pub monotone: bool,
    pub within_bound: bool,
    /// `max ‖h_ε‖ / ‖h_{ε_1}‖`.
    pub h_variation: f64,
    pub h_bounded: bool,
}

/// Null-control solves over a decreasing list of `ε`, run in parallel.
pub fn epsilon_sweep(prob: &LeaderProblem, eps_list: &[f64], tol: f64, max_iter: usize) -> Result<EpsilonSweep> {
    if eps_list.is_empty() {
        return Err(Error::config("epsilon list is empty"));
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::config("epsilons must be positive and strictly decreasing"));
    }
    let rows: Vec<EpsRow> = eps_list
        .par_iter()
        .map(|&epsilon| {
            let sol = solve_null_control(&prob.with_epsilon(epsilon)?, tol, max_iter)?;
            let d = sol.diagnostics;
            Ok(EpsRow {
                epsilon,
                norm_h: d.norm_h,
                norm_y_t_sq: d.norm_y_t_sq,
                j_eps: d.j_eps,
                outer_iters: d.outer_iterations,
                stationarity: d.stationarity,
                identity_residual: d.identity_residual,
            })
        })
        .collect::<Result<_>>()?;
    let fitted_constant = rows[0].norm_y_t_sq / rows[0].epsilon.sqrt();
    let monotone = rows.windows(2).all(|w| w[1].norm_y_t_sq <= 1.05 * w[0].norm_y_t_sq);
    let within_bound = rows
        .iter()
        .all(|r| r.norm_y_t_sq <= fitted_constant * r.epsilon.sqrt() * (1.0 + 1e-9) + 1e-300);
    let h_first = rows[0].norm_h;
    let h_max = rows.iter().map(|r| r.norm_h).fold(0.0, f64::max);
    let h_variation = if h_first > 0.0 {
        h_max / h_first
    } else if h_max == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(EpsilonSweep {
        rows,
        fitted_constant,
        monotone,
        within_bound,
        h_variation,
        h_bounded: h_variation <= 2.0,
    })
}

/// `log ‖z_d/κ‖_{L²(Q)}`, computed in log space; `-∞` for `z_d = 0` and
/// `+∞` when `z_d` is nonzero where `κ` vanishes.
pub fn log_kappa_weighted_norm(z_d: &Field, weights: &WeightSet, model: &Model) -> f64 {
    let grid = &model.grid;
    let mut terms = Vec::new();
    for n in 0..=grid.n_t {
        let w = if n == 0 || n == grid.n_t { 0.5 } else { 1.0 };
        let mass: f64 = z_d.level(n).iter().map(|v| v * v).sum::<f64>() * w * grid.dt * grid.dx;
        if mass == 0.0 {
            continue;
        }
        let log_inv_kappa_sq = -2.0 * weights.s * weights.phi_hat[n];
        if !log_inv_kappa_sq.is_finite() {
            return f64::INFINITY;
        }
        terms.push(mass.ln() + log_inv_kappa_sq);
    }
    0.5 * crate::verify::log_sum_exp(&terms)
}
