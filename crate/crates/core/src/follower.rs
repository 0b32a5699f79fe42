//! Low-regret follower control for a fixed leader control `h`.
//!
//! The sup over the missing initial datum is removed exactly: the follower
//! minimizes
//!
//! ```text
//! J^γ(v) = ‖y(h;v,0) - z_d‖²_{O_d×(0,T)} + μ‖v‖²_{O×(0,T)} - ‖z_d‖² + γ⁻¹‖S(0,·)‖²
//! ```
//!
//! where `S` solves the backward equation driven by `y χ_{O_d}`. Its gradient
//! is `2(μ v + q)χ_O`, with `q` closing the chain `y → S → p → q`.

use rayon::prelude::*;
use serde::Serialize;

use crate::cg::conjugate_gradient;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::pde::{norms, solve_backward, solve_forward, source_inner, source_norm_sq, space_inner, Field, TimeRule};

const MAX_RESTARTS: usize = 4;

#[derive(Debug, Clone)]
pub struct FollowerProblem<'a> {
    pub model: &'a Model,
    /// Leader control, supported on `ω`.
    pub h: Field,
    /// Target, supported on `O_d`.
    pub z_d: Field,
    pub gamma: f64,
    pub mu: f64,
    /// `1/√γ`; zero switches off the regret coupling.
    coupling: f64,
}

fn check_support(model: &Model, f: &Field, mask: &crate::domain::RegionMask, what: &str) -> Result<()> {
    if !f.fits(&model.grid) {
        return Err(Error::config(format!("{what} does not match the grid")));
    }
    for n in 0..=f.n_t() {
        let row = f.level(n);
        if let Some(i) = (0..row.len()).find(|&i| !mask.contains(i) && row[i] != 0.0) {
            return Err(Error::config(format!(
                "{what} is nonzero outside {} (level {n}, node {i})",
                mask.label.name()
            )));
        }
    }
    Ok(())
}

impl<'a> FollowerProblem<'a> {
    pub fn new(model: &'a Model, h: Field, z_d: Field, gamma: f64, mu: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::config(format!("gamma must be positive, got {gamma}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::config(format!("mu must be positive, got {mu}")));
        }
        check_support(model, &h, &model.regions.omega, "leader control h")?;
        check_support(model, &z_d, &model.regions.observe, "target z_d")?;
        Ok(FollowerProblem {
            model,
            h,
            z_d,
            gamma,
            mu,
            coupling: 1.0 / gamma.sqrt(),
        })
    }

    /// Problem with the same data but `1/√γ` replaced by zero.
    pub fn without_regret_coupling(mut self) -> Self {
        self.coupling = 0.0;
        self
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn with_h(&self, h: Field) -> Result<Self> {
        check_support(self.model, &h, &self.model.regions.omega, "leader control h")?;
        Ok(FollowerProblem { h, ..self.clone() })
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut p = FollowerProblem::new(self.model, self.h.clone(), self.z_d.clone(), gamma, self.mu)?;
        if self.coupling == 0.0 {
            p.coupling = 0.0;
        }
        Ok(p)
    }

    pub(crate) fn with_target(&self, z_d: Field) -> Self {
        FollowerProblem { z_d, ..self.clone() }
    }

    /// Same operator and regions, `h = 0` and `z_d = 0`.
    fn homogeneous(&self) -> Self {
        FollowerProblem {
            h: Field::zeros(&self.model.grid),
            z_d: Field::zeros(&self.model.grid),
            ..self.clone()
        }
    }

    pub fn z_d_norm_sq(&self) -> f64 {
        source_norm_sq(&self.model.grid, &self.z_d, Some(&self.model.regions.observe))
    }

    pub fn h_norm_sq(&self) -> f64 {
        source_norm_sq(&self.model.grid, &self.h, Some(&self.model.regions.omega))
    }

    fn inner_control(&self, a: &Field, b: &Field) -> f64 {
        source_inner(&self.model.grid, a, b, Some(&self.model.regions.control))
    }
}

/// States of the evaluation chain for one follower control.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub y: Field,
    pub s: Field,
    pub p: Field,
    pub q: Field,
}

/// `y = F(0, vχ_O + hχ_ω)`, `S = B(0, yχ_{O_d})`, `p = F(S(0)/√γ, 0)`,
/// `q = B(0, (y - z_d + p/√γ)χ_{O_d})`.
pub fn chain_solve(v: &Field, prob: &FollowerProblem) -> Result<ChainState> {
    let model = prob.model;
    let regions = &model.regions;
    let op = &model.op;
    let zero = vec![0.0; model.grid.n_nodes()];

    let mut src = v.masked_source(&regions.control);
    src.axpy(1.0, &prob.h.masked_source(&regions.omega));
    let y = solve_forward(op, &zero, Some(&src))?;
    let s = solve_backward(op, &zero, Some(&y.masked_source(&regions.observe)))?;
    let p0: Vec<f64> = s.initial().iter().map(|v| prob.coupling * v).collect();
    let p = solve_forward(op, &p0, None)?;
    let mut q_src = y.lincomb(1.0, -1.0, &prob.z_d);
    q_src.axpy(prob.coupling, &p);
    let q = solve_backward(op, &zero, Some(&q_src.masked_source(&regions.observe)))?;
    Ok(ChainState { y, s, p, q })
}

fn j_gamma_from_chain(v: &Field, prob: &FollowerProblem, chain: &ChainState) -> f64 {
    let grid = &prob.model.grid;
    let regions = &prob.model.regions;
    let miss = chain.y.lincomb(1.0, -1.0, &prob.z_d);
    let s0 = chain.s.initial();
    source_norm_sq(grid, &miss, Some(&regions.observe)) + prob.mu * source_norm_sq(grid, v, Some(&regions.control))
        - prob.z_d_norm_sq()
        + prob.coupling * prob.coupling * space_inner(grid, s0, s0)
}

pub fn eval_j_gamma(v: &Field, prob: &FollowerProblem) -> Result<f64> {
    let chain = chain_solve(v, prob)?;
    Ok(j_gamma_from_chain(v, prob, &chain))
}

fn gradient_from_chain(v: &Field, prob: &FollowerProblem, chain: &ChainState) -> Field {
    let mut g = v.scaled(prob.mu);
    g.axpy(1.0, &chain.q.to_source_levels());
    g.scale(2.0);
    g.masked_source(&prob.model.regions.control)
}

/// `2(μ v + q)χ_O`, the gradient of `J^γ` in the `L²(O×(0,T))` product the
/// functional is discretized with.
pub fn grad_j_gamma(v: &Field, prob: &FollowerProblem) -> Result<Field> {
    let chain = chain_solve(v, prob)?;
    Ok(gradient_from_chain(v, prob, &chain))
}

/// `J(h; v, g) = ‖y(h;v,g) - z_d‖²_{O_d} + μ‖v‖²_O`.
pub fn tracking_cost(g: &[f64], v: &Field, h: &Field, prob: &FollowerProblem) -> Result<f64> {
    let model = prob.model;
    let regions = &model.regions;
    let mut src = v.masked_source(&regions.control);
    src.axpy(1.0, &h.masked_source(&regions.omega));
    let y = solve_forward(&model.op, g, Some(&src))?;
    let miss = y.lincomb(1.0, -1.0, &prob.z_d);
    Ok(source_norm_sq(&model.grid, &miss, Some(&regions.observe))
        + prob.mu * source_norm_sq(&model.grid, v, Some(&regions.control)))
}

/// Empirical constants `‖·‖ / (‖h‖ + ‖z_d‖)` for the a-priori estimates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FollowerEstimates {
    pub data_norm: f64,
    pub v: f64,
    pub y_h1k: f64,
    pub s_h1k: f64,
    pub p_h1k: f64,
    pub p_over_sqrt_gamma: f64,
    pub q_h1k: f64,
    pub s0_over_sqrt_gamma: f64,
    pub s0: f64,
}

#[derive(Debug, Clone)]
pub struct FollowerSolution {
    pub v: Field,
    pub y: Field,
    pub s: Field,
    pub p: Field,
    pub q: Field,
    pub j_gamma: f64,
    /// `‖μv + q‖_O / max(1, ‖q‖_O)`.
    pub residual: f64,
    pub iterations: usize,
    /// `‖v‖ / (‖z_d‖ + ‖h‖)`.
    pub bound_constant: f64,
    /// `J^γ` along the iterates.
    pub objective_history: Vec<f64>,
    pub estimates: FollowerEstimates,
}

impl FollowerSolution {
    pub fn v_norm(&self, prob: &FollowerProblem) -> f64 {
        source_norm_sq(&prob.model.grid, &self.v, Some(&prob.model.regions.control)).sqrt()
    }

    pub fn s0_norm(&self, prob: &FollowerProblem) -> f64 {
        let s0 = self.s.initial();
        space_inner(&prob.model.grid, s0, s0).sqrt()
    }
}

fn stationarity_residual(v: &Field, prob: &FollowerProblem, chain: &ChainState) -> f64 {
    let regions = &prob.model.regions;
    let grid = &prob.model.grid;
    let q = chain.q.to_source_levels();
    let mut r = v.scaled(prob.mu);
    r.axpy(1.0, &q);
    let num = source_norm_sq(grid, &r, Some(&regions.control)).sqrt();
    let den = source_norm_sq(grid, &q, Some(&regions.control)).sqrt().max(1.0);
    num / den
}

/// Minimizes `J^γ` by conjugate gradient from `v = 0`.
pub fn solve_lowregret(prob: &FollowerProblem, tol: f64, max_iter: usize) -> Result<FollowerSolution> {
    if !(tol > 0.0) {
        return Err(Error::config(format!("follower tolerance must be positive, got {tol}")));
    }
    let grid = &prob.model.grid;
    let control = &prob.model.regions.control;
    let hom = prob.homogeneous();

    let zero = Field::zeros(grid);
    let chain0 = chain_solve(&zero, prob)?;
    let j0 = j_gamma_from_chain(&zero, prob, &chain0);
    let b = gradient_from_chain(&zero, prob, &chain0).scaled(-1.0);

    let apply = |d: &Field| -> Result<Field> {
        let chain = chain_solve(d, &hom)?;
        Ok(gradient_from_chain(d, &hom, &chain))
    };
    let inner = |a: &Field, c: &Field| prob.inner_control(a, c);
    let mu = prob.mu;
    // ‖r‖ = 2‖μv + q‖ and ‖q‖ ≈ μ‖v‖ near the optimum

    let mut v = zero.clone();
    let mut iterations = 0;
    let mut history = vec![j0];
    let mut chain = chain0;
    let mut residual = stationarity_residual(&v, prob, &chain);
    for restart in 0..=MAX_RESTARTS {
        if residual <= tol {
            break;
        }
        if restart == MAX_RESTARTS {
            return Err(Error::NonConvergence {
                solver: "follower CG",
                iterations,
                residual,
                hint: " (true residual stalled above tolerance)".into(),
            });
        }
        let offset = *history.last().unwrap();
        let hv = apply(&v)?;
        let base = 0.5 * inner(&v, &hv) - inner(&b, &v);
        // each restart asks the recurrence for a tighter residual than the
        // one the true residual just missed
        let target = tol * 0.25f64.powi(restart as i32);
        let stop = |x: &Field, r: f64| 0.5 * r <= target * (mu * inner(x, x).sqrt()).max(1.0);
        let out = conjugate_gradient(
            apply,
            &b,
            v.clone(),
            inner,
            stop,
            max_iter.saturating_sub(iterations),
            "follower CG",
        )
        .map_err(|e| match e {
            Error::NonConvergence { solver, residual, .. } => Error::NonConvergence {
                solver,
                iterations: max_iter,
                residual: 0.5 * residual,
                hint: String::new(),
            },
            other => other,
        })?;
        iterations += out.iterations;
        history.extend(out.objective.iter().skip(1).map(|o| offset + (o - base)));
        v = out.x.masked_source(control);
        chain = chain_solve(&v, prob)?;
        residual = stationarity_residual(&v, prob, &chain);
    }

    let j_gamma = j_gamma_from_chain(&v, prob, &chain);
    let data_norm = prob.z_d_norm_sq().sqrt() + prob.h_norm_sq().sqrt();
    let denom = data_norm.max(f64::MIN_POSITIVE);
    let op = &prob.model.op;
    let v_norm = source_norm_sq(grid, &v, Some(control)).sqrt();
    let s0 = chain.s.initial();
    let s0_norm = space_inner(grid, s0, s0).sqrt();
    let estimates = FollowerEstimates {
        data_norm,
        v: v_norm / denom,
        y_h1k: norms(op, &chain.y, TimeRule::Implicit).h1k_sq().sqrt() / denom,
        s_h1k: norms(op, &chain.s, TimeRule::Implicit).h1k_sq().sqrt() / denom,
        p_h1k: norms(op, &chain.p, TimeRule::Implicit).h1k_sq().sqrt() / denom,
        p_over_sqrt_gamma: prob.coupling * norms(op, &chain.p, TimeRule::Implicit).l2_q_sq.sqrt() / denom,
        q_h1k: norms(op, &chain.q, TimeRule::Implicit).h1k_sq().sqrt() / denom,
        s0_over_sqrt_gamma: prob.coupling * s0_norm / denom,
        s0: s0_norm / denom,
    };
    Ok(FollowerSolution {
        v,
        y: chain.y,
        s: chain.s,
        p: chain.p,
        q: chain.q,
        j_gamma,
        residual,
        iterations,
        bound_constant: v_norm / denom,
        objective_history: history,
        estimates,
    })
}

/// Relative defect of
/// `J(h;v,g) = J(0;0,g) + J(h;v,0) - ‖z_d‖² + 2∫ g S(0,·;h;v)`,
/// each term from its own solve.
pub fn decomposition_check(g: &[f64], v: &Field, prob: &FollowerProblem) -> Result<f64> {
    let grid = &prob.model.grid;
    let zero_slice = vec![0.0; grid.n_nodes()];
    let zero = Field::zeros(grid);
    let full = tracking_cost(g, v, &prob.h, prob)?;
    let data_only = tracking_cost(g, &zero, &zero, prob)?;
    let control_only = tracking_cost(&zero_slice, v, &prob.h, prob)?;
    let zd = prob.z_d_norm_sq();
    let chain = chain_solve(v, prob)?;
    let cross = 2.0 * space_inner(grid, g, chain.s.initial());
    let rhs = data_only + control_only - zd + cross;
    let scale = full.abs() + data_only.abs() + control_only.abs() + zd + cross.abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((full - rhs).abs() / scale)
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaRow {
    pub gamma: f64,
    pub v_norm: f64,
    pub s0_norm: f64,
    pub s0_over_sqrt_gamma: f64,
    pub j_gamma: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaSweep {
    pub rows: Vec<GammaRow>,
    /// `‖S(0)‖/√γ` at the first (largest) γ.
    pub fitted_constant: f64,
    /// `‖z_d‖ + √μ‖h‖`, the explicit constant of the `√γ` bound.
    pub explicit_constant: f64,
    pub s0_decreasing: bool,
    pub s0_within_fitted_bound: bool,
    pub s0_within_explicit_bound: bool,
    /// `max ‖v^γ‖ / ‖v^{γ_1}‖`.
    pub v_variation: f64,
}

/// Low-regret solves over a decreasing list of `γ`, run in parallel.
pub fn gamma_sweep(prob: &FollowerProblem, gammas: &[f64], tol: f64, max_iter: usize) -> Result<GammaSweep> {
    if gammas.is_empty() {
        return Err(Error::config("gamma list is empty"));
    }
    if gammas.windows(2).any(|w| !(w[1] < w[0])) || gammas.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::config("gammas must be positive and strictly decreasing"));
    }
    let rows: Vec<GammaRow> = gammas
        .par_iter()
        .map(|&gamma| {
            let p = prob.with_gamma(gamma)?;
            let sol = solve_lowregret(&p, tol, max_iter)?;
            let s0 = sol.s0_norm(&p);
            Ok(GammaRow {
                gamma,
                v_norm: sol.v_norm(&p),
                s0_norm: s0,
                s0_over_sqrt_gamma: s0 / gamma.sqrt(),
                j_gamma: sol.j_gamma,
                residual: sol.residual,
                iterations: sol.iterations,
            })
        })
        .collect::<Result<_>>()?;

    let fitted_constant = rows[0].s0_over_sqrt_gamma;
    let explicit_constant = prob.z_d_norm_sq().sqrt() + prob.mu.sqrt() * prob.h_norm_sq().sqrt();
    let slack = 1.0 + 1e-9;
    let s0_decreasing = rows.windows(2).all(|w| w[1].s0_norm <= w[0].s0_norm * slack);
    let s0_within_fitted_bound = rows
        .iter()
        .all(|r| r.s0_norm <= r.gamma.sqrt() * fitted_constant * slack + 1e-300);
    let s0_within_explicit_bound = rows
        .iter()
        .all(|r| r.s0_norm <= r.gamma.sqrt() * explicit_constant * slack + 1e-300);
    let v_first = rows[0].v_norm;
    let v_max = rows.iter().map(|r| r.v_norm).fold(0.0, f64::max);
    let v_variation = if v_first > 0.0 { v_max / v_first } else if v_max == 0.0 { 1.0 } else { f64::INFINITY };
    Ok(GammaSweep {
        rows,
        fitted_constant,
        explicit_constant,
        s0_decreasing,
        s0_within_fitted_bound,
        s0_within_explicit_bound,
        v_variation,
    })
}
