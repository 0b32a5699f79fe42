//! Carleman and observability weight functions.
//!
//! With `Θ(t) = (t(T-t))^{-4}`:
//!
//! ```text
//! δ(x)   = λ(∫_0^x y/k(y) dy - d)        φ_w = Θ δ
//! Ψ(x)   = e^{rσ(x)} - e^{2r‖σ‖∞}        Φ   = Θ Ψ
//! η      = Θ e^{rσ}
//! Θ̃, φ̃_w = frozen at t = T/2 on [0, T/2]
//! φ̂(t)   = min_x φ̃_w(t,x)                κ   = e^{s φ̂}
//! 1/η̂²   = Θ̃³ (x²/k) e^{2sφ̃_w}
//! ```
//!
//! `Θ` is infinite at `t ∈ {0, T}`; the stored values are the limits
//! (`Θ = +∞`, `φ_w = Φ = -∞`, `κ(T) = 0`, `1/η̂²(T,·) = 0`). Products of a
//! power of `Θ` with `e^{2sφ_w}` must go through [`WeightSet::log_theta`] and
//! [`WeightSet::log_exp_2s_phi`] rather than the raw arrays.

use serde::Serialize;

use super::{DiffusionCoefficient, Grid, Sigma};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarlemanParams {
    pub r: f64,
    pub d: f64,
    pub lambda: f64,
    /// Admissible interval for `λ`.
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub sigma_sup: f64,
}

/// Lower bounds `(r_min, d_min)` on `r` and `d`.
pub fn parameter_lower_bounds(k: &DiffusionCoefficient, sigma_sup: f64) -> (f64, f64) {
    let r_min = 4.0 * std::f64::consts::LN_2 / sigma_sup;
    let d_min = 5.0 / (k.k(1.0) * (2.0 - k.tau));
    (r_min, d_min)
}

/// Endpoints of the admissible interval for `λ` at given `(r, d)`.
pub fn lambda_interval(k: &DiffusionCoefficient, sigma_sup: f64, r: f64, d: f64) -> (f64, f64) {
    let c = k.k(1.0) * (2.0 - k.tau);
    let e1 = (r * sigma_sup).exp();
    let e2 = (2.0 * r * sigma_sup).exp();
    let lo = c * (e2 - 1.0) / (d * c - 1.0);
    let hi = 4.0 * (e2 - e1) / (3.0 * d);
    (lo, hi)
}

/// `r` and `d` at 110% of their lower bounds, `λ` at the midpoint of its
/// admissible interval.
pub fn carleman_parameters(k: &DiffusionCoefficient, sigma_sup: f64) -> Result<CarlemanParams> {
    if !(sigma_sup > 0.0 && sigma_sup.is_finite()) {
        return Err(Error::config(format!("‖sigma‖∞ must be positive, got {sigma_sup}")));
    }
    if k.hypothesis_gap(1.0) > 1e-12 {
        return Err(Error::config("diffusion coefficient violates x k'(x) <= tau k(x)"));
    }
    let (r_min, d_min) = parameter_lower_bounds(k, sigma_sup);
    let r = 1.1 * r_min;
    let d = 1.1 * d_min;
    let (lo, hi) = lambda_interval(k, sigma_sup, r, d);
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Inconsistent(format!(
            "empty lambda interval [{lo:.6e}, {hi:.6e}] for r = {r:.6}, d = {d:.6}"
        )));
    }
    Ok(CarlemanParams {
        r,
        d,
        lambda: 0.5 * (lo + hi),
        lambda_lo: lo,
        lambda_hi: hi,
        sigma_sup,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightSet {
    pub n_x: usize,
    pub n_t: usize,
    pub s: f64,
    pub params: CarlemanParams,
    pub sigma: Vec<f64>,
    pub theta: Vec<f64>,
    pub delta: Vec<f64>,
    pub psi: Vec<f64>,
    /// `φ_w(t_n, x_i)` at `n·(n_x+2) + i`.
    pub phi_w: Vec<f64>,
    pub eta: Vec<f64>,
    pub big_phi: Vec<f64>,
    pub theta_tilde: Vec<f64>,
    pub phi_w_tilde: Vec<f64>,
    pub phi_hat: Vec<f64>,
    pub kappa: Vec<f64>,
    pub eta_hat_inv_sq: Vec<f64>,
    log_theta: Vec<f64>,
}

fn theta_at(t: f64, horizon: f64) -> f64 {
    let p = t * (horizon - t);
    if p <= 0.0 {
        f64::INFINITY
    } else {
        p.powi(-4)
    }
}

fn log_theta_at(t: f64, horizon: f64) -> f64 {
    let p = t * (horizon - t);
    if p <= 0.0 {
        f64::INFINITY
    } else {
        -4.0 * p.ln()
    }
}

pub fn build_weights(
    grid: &Grid,
    k: &DiffusionCoefficient,
    sigma: &Sigma,
    params: &CarlemanParams,
    s: f64,
) -> Result<WeightSet> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::config(format!("Carleman parameter s must be positive, got {s}")));
    }
    let nn = grid.n_nodes();
    let horizon = grid.horizon;
    let half = 0.5 * horizon;
    let CarlemanParams { r, d, lambda, sigma_sup, .. } = *params;

    let sigma_nodes = sigma.nodes.clone();
    let theta: Vec<f64> = grid.t.iter().map(|&t| theta_at(t, horizon)).collect();
    let log_theta: Vec<f64> = grid.t.iter().map(|&t| log_theta_at(t, horizon)).collect();
    let delta: Vec<f64> = grid
        .x
        .iter()
        .map(|&x| lambda * (k.primitive_x_over_k(x) - d))
        .collect();
    let cap = (2.0 * r * sigma_sup).exp();
    let psi: Vec<f64> = sigma_nodes.iter().map(|&sg| (r * sg).exp() - cap).collect();

    let theta_half = theta_at(half, horizon);
    let theta_tilde: Vec<f64> = grid
        .t
        .iter()
        .zip(&theta)
        .map(|(&t, &th)| if t <= half { theta_half } else { th })
        .collect();

    let mut phi_w = vec![0.0; grid.n_levels() * nn];
    let mut big_phi = vec![0.0; grid.n_levels() * nn];
    let mut eta = vec![0.0; grid.n_levels() * nn];
    let mut phi_w_tilde = vec![0.0; grid.n_levels() * nn];
    let mut eta_hat_inv_sq = vec![0.0; grid.n_levels() * nn];
    let mut phi_hat = vec![0.0; grid.n_levels()];
    let mut kappa = vec![0.0; grid.n_levels()];

    for n in 0..grid.n_levels() {
        let th = theta[n];
        let tt = theta_tilde[n];
        let at_end = !tt.is_finite();
        let mut min_tilde = f64::INFINITY;
        for i in 0..nn {
            let idx = n * nn + i;
            phi_w[idx] = th * delta[i];
            big_phi[idx] = th * psi[i];
            eta[idx] = th * (r * sigma_nodes[i]).exp();
            phi_w_tilde[idx] = tt * delta[i];
            min_tilde = min_tilde.min(phi_w_tilde[idx]);
            let x = grid.x[i];
            eta_hat_inv_sq[idx] = if at_end || x == 0.0 {
                0.0
            } else {
                (3.0 * tt.ln() + k.x2_over_k(x).ln() + 2.0 * s * phi_w_tilde[idx]).exp()
            };
        }
        phi_hat[n] = min_tilde;
        kappa[n] = (s * min_tilde).exp();
    }

    Ok(WeightSet {
        n_x: grid.n_x,
        n_t: grid.n_t,
        s,
        params: *params,
        sigma: sigma_nodes,
        theta,
        delta,
        psi,
        phi_w,
        eta,
        big_phi,
        theta_tilde,
        phi_w_tilde,
        phi_hat,
        kappa,
        eta_hat_inv_sq,
        log_theta,
    })
}

impl WeightSet {
    fn idx(&self, n: usize, i: usize) -> usize {
        n * (self.n_x + 2) + i
    }

    pub fn phi_w_at(&self, n: usize, i: usize) -> f64 {
        self.phi_w[self.idx(n, i)]
    }

    pub fn big_phi_at(&self, n: usize, i: usize) -> f64 {
        self.big_phi[self.idx(n, i)]
    }

    pub fn phi_w_tilde_at(&self, n: usize, i: usize) -> f64 {
        self.phi_w_tilde[self.idx(n, i)]
    }

    pub fn eta_hat_inv_sq_at(&self, n: usize, i: usize) -> f64 {
        self.eta_hat_inv_sq[self.idx(n, i)]
    }

    /// `ln Θ(t_n)`, `+∞` at the end points.
    pub fn log_theta(&self, n: usize) -> f64 {
        self.log_theta[n]
    }

    /// `2 s φ_w(t_n, x_i)`, `-∞` at the end points.
    pub fn log_exp_2s_phi(&self, n: usize, i: usize) -> f64 {
        2.0 * self.s * self.phi_w_at(n, i)
    }

    /// `ln(Θ^m e^{2sφ_w})`; `-∞` at `t ∈ {0,T}` where the exponential wins.
    pub fn log_theta_pow_exp(&self, m: f64, n: usize, i: usize) -> f64 {
        if !self.log_theta[n].is_finite() {
            f64::NEG_INFINITY
        } else {
            m * self.log_theta[n] + self.log_exp_2s_phi(n, i)
        }
    }

    /// `ln(Θ^m e^{2sΦ})` with the same end point convention.
    pub fn log_theta_pow_exp_big(&self, m: f64, n: usize, i: usize) -> f64 {
        if !self.log_theta[n].is_finite() {
            f64::NEG_INFINITY
        } else {
            m * self.log_theta[n] + 2.0 * self.s * self.big_phi_at(n, i)
        }
    }

    pub fn interior_levels(&self) -> std::ops::Range<usize> {
        1..self.n_t
    }
}
