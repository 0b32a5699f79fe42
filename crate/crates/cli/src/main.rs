//! `hierctrl <subcommand> --config <path> [--out <dir>] [--seed <u64>]`
//!
//! Exit codes: 0 all checks passed, 1 a check failed or an unexpected
//! error, 2 configuration error, 3 region error, 4 solver non-convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hierctrl_core::config::RunConfig;
use hierctrl_core::domain::{RegionLabel, RegionMask};
use hierctrl_core::export::{
    write_eps_rows_csv, write_eps_sweep_csv, write_field_csv, write_gamma_sweep_csv, write_json, write_ratios_csv, write_weights_csv,
};
use hierctrl_core::follower::{gamma_sweep, solve_lowregret, FollowerProblem};
use hierctrl_core::leader::{epsilon_sweep, solve_null_control, EpsRow, LeaderProblem, QuartetSettings};
use hierctrl_core::pde::{norms, solve_forward, source_norm_sq, space_inner, Field, TimeRule};
use hierctrl_core::verify::{check_hardy, check_quartet_inequalities, check_weight_orderings};
use hierctrl_core::{Error, Model};
use log::info;
use serde::Serialize;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Subcommand {
    Solve,
    Follower,
    Leader,
    SweepEps,
    SweepGamma,
    Verify,
    All,
}

#[derive(Debug, Parser)]
#[command(name = "hierctrl", version, about = "Leader–follower control of a degenerate parabolic equation")]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// JSON configuration; `//` comments are allowed.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `weights.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    value: f64,
    bound: Option<f64>,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.to_string(),
            passed: value <= bound,
            value,
            bound: Some(bound),
        }
    }

    fn flag(name: &str, passed: bool, value: f64) -> Self {
        Check {
            name: name.to_string(),
            passed,
            value,
            bound: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct Summary {
    subcommand: Subcommand,
    version: &'static str,
    status: &'static str,
    exit_code: u8,
    checks: Vec<Check>,
    diagnostics: Option<String>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Unsupported(_) | Error::Json(_) => 2,
        Error::Region(_) => 3,
        Error::NonConvergence { .. } => 4,
        _ => 1,
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    model: &'a Model,
    out: &'a Path,
    checks: Vec<Check>,
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn follower_problem(&self, h: Field) -> hierctrl_core::Result<FollowerProblem<'_>> {
        let f = &self.cfg.follower;
        FollowerProblem::new(self.model, h, self.cfg.target(self.model), f.gamma, f.mu)
    }

    fn leader_problem(&self, epsilon: f64) -> hierctrl_core::Result<LeaderProblem<'_>> {
        let l = &self.cfg.leader;
        let follower = self.follower_problem(Field::zeros(&self.model.grid))?;
        LeaderProblem::new(follower, epsilon, l.inner_tol(), l.quartet_tol, l.relaxation)
    }

    fn solve(&mut self) -> hierctrl_core::Result<()> {
        let grid = &self.model.grid;
        let g = self.cfg.initial.sample(grid);
        let f = self.cfg.leader_control(self.model);
        let y = solve_forward(&self.model.op, &g, Some(&f))?;
        write_field_csv(&self.path("state.csv"), grid, &y)?;
        let n = norms(&self.model.op, &y, TimeRule::Implicit);
        write_json(&self.path("solve.json"), &n)?;
        let growth = ((2.0 * self.model.op.a0.sup_norm() + 3.0) * grid.horizon).exp();
        let data = source_norm_sq(grid, &f, None) + space_inner(grid, &g, &g);
        self.checks.push(Check::flag(
            "solve.finite",
            y.values().iter().all(|v| v.is_finite()),
            y.max_abs(),
        ));
        self.checks
            .push(Check::at_most("solve.energy", n.l2_final_sq + n.h1k_sq(), growth * data));
        Ok(())
    }

    fn follower(&mut self) -> hierctrl_core::Result<()> {
        let grid = &self.model.grid;
        let f = &self.cfg.follower;
        let prob = self.follower_problem(self.cfg.leader_control(self.model))?;
        let sol = solve_lowregret(&prob, f.tol, f.max_iter)?;
        write_field_csv(&self.path("follower_v.csv"), grid, &sol.v)?;
        write_field_csv(&self.path("follower_y.csv"), grid, &sol.y)?;

        let v_norm = sol.v_norm(&prob);
        let z_norm = prob.z_d_norm_sq().sqrt();
        let h_norm = prob.h_norm_sq().sqrt();
        write_json(
            &self.path("follower.json"),
            &serde_json::json!({
                "gamma": f.gamma,
                "mu": f.mu,
                "residual": sol.residual,
                "iterations": sol.iterations,
                "j_gamma": sol.j_gamma,
                "norm_v": v_norm,
                "norm_S0": sol.s0_norm(&prob),
                "norm_z_d": z_norm,
                "norm_h": h_norm,
                "bound_constant": sol.bound_constant,
                "estimates": sol.estimates,
                "objective_history": sol.objective_history,
            }),
        )?;

        let scale = sol.objective_history.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let rise = sol
            .objective_history
            .windows(2)
            .fold(0.0f64, |m, w| m.max(w[1] - w[0]));
        self.checks.push(Check::at_most("follower.stationarity", sol.residual, f.tol));
        self.checks.push(Check::at_most("follower.objective_monotone", rise, 1e-12 * scale));
        self.checks
            .push(Check::flag("follower.lower_bound", sol.j_gamma >= -z_norm * z_norm, sol.j_gamma));
        self.checks
            .push(Check::at_most("follower.control_bound", v_norm, z_norm / f.mu.sqrt() + h_norm));
        Ok(())
    }

    fn leader(&mut self) -> hierctrl_core::Result<()> {
        let grid = &self.model.grid;
        let l = &self.cfg.leader;
        let prob = self.leader_problem(l.epsilon)?;
        let nc = solve_null_control(&prob, l.tol, l.max_iter)?;
        write_field_csv(&self.path("leader_h.csv"), grid, &nc.h)?;
        write_field_csv(&self.path("leader_y.csv"), grid, &nc.follower.y)?;
        let d = &nc.diagnostics;
        let row = EpsRow {
            epsilon: d.epsilon,
            norm_h: d.norm_h,
            norm_y_t_sq: d.norm_y_t_sq,
            j_eps: d.j_eps,
            outer_iters: d.outer_iterations,
            stationarity: d.stationarity,
            identity_residual: d.identity_residual,
        };
        write_eps_rows_csv(&self.path("leader.csv"), &[row])?;
        write_json(&self.path("leader.json"), d)?;
        self.checks.push(Check::at_most("leader.stationarity", d.stationarity, 1e-6));
        self.checks
            .push(Check::at_most("leader.identity_residual", d.identity_residual, 1e-6));
        Ok(())
    }

    fn sweep_eps(&mut self) -> hierctrl_core::Result<()> {
        let l = &self.cfg.leader;
        let prob = self.leader_problem(l.eps_list[0])?;
        let sweep = epsilon_sweep(&prob, &l.eps_list, l.tol, l.max_iter)?;
        write_eps_sweep_csv(&self.path("sweep_eps.csv"), &sweep)?;
        write_json(&self.path("sweep_eps.json"), &sweep)?;
        let worst_stat = sweep.rows.iter().fold(0.0f64, |m, r| m.max(r.stationarity));
        let worst_id = sweep.rows.iter().fold(0.0f64, |m, r| m.max(r.identity_residual));
        let last = sweep.rows.last().map_or(0.0, |r| r.norm_y_t_sq);
        self.checks.push(Check::flag("sweep_eps.monotone", sweep.monotone, last));
        self.checks
            .push(Check::flag("sweep_eps.sqrt_eps_bound", sweep.within_bound, sweep.fitted_constant));
        self.checks.push(Check::at_most("sweep_eps.h_variation", sweep.h_variation, 2.0));
        self.checks.push(Check::at_most("sweep_eps.stationarity", worst_stat, 1e-6));
        self.checks.push(Check::at_most("sweep_eps.identity_residual", worst_id, 1e-6));
        Ok(())
    }

    fn sweep_gamma(&mut self) -> hierctrl_core::Result<()> {
        let f = &self.cfg.follower;
        let prob = self.follower_problem(self.cfg.leader_control(self.model))?;
        let sweep = gamma_sweep(&prob, &f.gammas, f.tol, f.max_iter)?;
        write_gamma_sweep_csv(&self.path("sweep_gamma.csv"), &sweep)?;
        write_json(&self.path("sweep_gamma.json"), &sweep)?;
        let worst = sweep.rows.iter().fold(0.0f64, |m, r| m.max(r.residual));
        self.checks
            .push(Check::flag("sweep_gamma.s0_decreasing", sweep.s0_decreasing, sweep.rows[0].s0_norm));
        self.checks.push(Check::flag(
            "sweep_gamma.s0_fitted_bound",
            sweep.s0_within_fitted_bound,
            sweep.fitted_constant,
        ));
        self.checks.push(Check::flag(
            "sweep_gamma.s0_explicit_bound",
            sweep.s0_within_explicit_bound,
            sweep.explicit_constant,
        ));
        self.checks.push(Check::at_most("sweep_gamma.v_variation", sweep.v_variation, 2.0));
        self.checks.push(Check::at_most("sweep_gamma.stationarity", worst, f.tol));
        Ok(())
    }

    fn verify(&mut self) -> hierctrl_core::Result<()> {
        let grid = &self.model.grid;
        let w = &self.cfg.weights;
        let weights = self.cfg.weights(self.model)?;
        write_weights_csv(&self.path("weights.csv"), grid, &weights)?;

        let hardy = check_hardy(grid, &self.model.diffusion, w.samples, w.seed)?;
        let orderings = check_weight_orderings(grid, &self.model.diffusion, &weights, w.alpha_cut)?;
        let f = &self.cfg.follower;
        let settings = QuartetSettings::new(f.mu, f.gamma, self.cfg.leader.quartet_tol, self.cfg.leader.relaxation)?;
        let omega_1 = &self.model.regions.omega_1;
        let omega_prime: RegionMask = omega_1.shrink(1, RegionLabel::Omega1);
        let (cacc, obs) = check_quartet_inequalities(self.model, &weights, &settings, &omega_prime, w.samples, w.seed)?;

        write_ratios_csv(&self.path("ratios.csv"), &[&hardy, &cacc, &obs])?;
        write_json(&self.path("verify.json"), &[&hardy, &orderings, &cacc, &obs])?;
        for rep in [&hardy, &orderings, &cacc, &obs] {
            self.checks.push(Check {
                name: format!("verify.{}", rep.name),
                passed: rep.passed,
                value: rep.max_ratio,
                bound: rep.bound,
            });
        }
        Ok(())
    }

    fn dispatch(&mut self, sub: Subcommand) -> hierctrl_core::Result<()> {
        match sub {
            Subcommand::Solve => self.solve(),
            Subcommand::Follower => self.follower(),
            Subcommand::Leader => self.leader(),
            Subcommand::SweepEps => self.sweep_eps(),
            Subcommand::SweepGamma => self.sweep_gamma(),
            Subcommand::Verify => self.verify(),
            Subcommand::All => {
                for s in [
                    Subcommand::Solve,
                    Subcommand::Follower,
                    Subcommand::Leader,
                    Subcommand::SweepEps,
                    Subcommand::SweepGamma,
                    Subcommand::Verify,
                ] {
                    info!("running {s:?}");
                    self.dispatch(s)?;
                }
                Ok(())
            }
        }
    }
}

fn run(cli: &Cli) -> Result<u8, (u8, String)> {
    let fail = |e: Error| (exit_code(&e), e.to_string());
    let mut cfg = RunConfig::load(&cli.config).map_err(fail)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.weights.seed = seed;
    }
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| fail(e.into()))?;
    write_json(&out.join("run_manifest.json"), &cfg.manifest(VERSION)).map_err(fail)?;

    let write_summary = |checks: Vec<Check>, code: u8, diagnostics: Option<String>| {
        let status = match code {
            0 => "ok",
            1 if diagnostics.is_none() => "checks_failed",
            2 => "config_error",
            3 => "region_error",
            4 => "non_convergence",
            _ => "error",
        };
        let summary = Summary {
            subcommand: cli.subcommand,
            version: VERSION,
            status,
            exit_code: code,
            checks,
            diagnostics,
        };
        write_json(&out.join("summary.json"), &summary).map_err(fail)
    };

    let model = match cfg.model() {
        Ok(m) => m,
        Err(e) => {
            let code = exit_code(&e);
            write_summary(Vec::new(), code, Some(e.to_string()))?;
            return Err((code, e.to_string()));
        }
    };
    let mut run = Run {
        cfg: &cfg,
        model: &model,
        out: &out,
        checks: Vec::new(),
    };
    let result = run.dispatch(cli.subcommand);
    let checks = std::mem::take(&mut run.checks);
    match result {
        Ok(()) => {
            for c in checks.iter().filter(|c| !c.passed) {
                log::warn!("check {} failed: value {:e}, bound {:?}", c.name, c.value, c.bound);
            }
            let code = if checks.iter().all(|c| c.passed) { 0 } else { 1 };
            write_summary(checks, code, None)?;
            Ok(code)
        }
        Err(e) => {
            let code = exit_code(&e);
            write_summary(checks, code, Some(e.to_string()))?;
            Err((code, e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("hierctrl: {msg}");
            ExitCode::from(code)
        }
    }
}
