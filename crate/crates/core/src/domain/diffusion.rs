use serde::Serialize;

use crate::error::{Error, Result};

/// Power-law diffusion `k(x) = x^alpha`, degenerate at `x = 0` when `alpha > 0`.
///
/// Satisfies `x k'(x) <= tau k(x)` with `tau = alpha` (equality everywhere).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionCoefficient {
    pub alpha: f64,
    pub tau: f64,
}

pub fn make_power_diffusion(alpha: f64) -> Result<DiffusionCoefficient> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::config(format!("diffusion exponent must be in [0,1), got {alpha}")));
    }
    if alpha >= 1.0 {
        return Err(Error::Unsupported(format!(
            "strongly degenerate exponent alpha = {alpha} (needs a Neumann condition at x = 0)"
        )));
    }
    Ok(DiffusionCoefficient { alpha, tau: alpha })
}

impl DiffusionCoefficient {
    pub fn k(&self, x: f64) -> f64 {
        if self.alpha == 0.0 {
            1.0
        } else {
            x.powf(self.alpha)
        }
    }

    /// `k'(x)`; infinite at `x = 0` for `0 < alpha < 1`.
    pub fn k_prime(&self, x: f64) -> f64 {
        if self.alpha == 0.0 {
            0.0
        } else {
            self.alpha * x.powf(self.alpha - 1.0)
        }
    }

    /// `x k'(x)`, finite on all of `[0,1]`.
    pub fn x_k_prime(&self, x: f64) -> f64 {
        self.alpha * self.k(x)
    }

    /// `∫_0^x y / k(y) dy`.
    pub fn primitive_x_over_k(&self, x: f64) -> f64 {
        let e = 2.0 - self.alpha;
        x.powf(e) / e
    }

    /// `x² / k(x)`, non-decreasing on `(0,1]`.
    pub fn x2_over_k(&self, x: f64) -> f64 {
        x.powf(2.0 - self.alpha)
    }

    /// `x k'(x) - tau k(x)`; non-positive under the structural hypothesis.
    pub fn hypothesis_gap(&self, x: f64) -> f64 {
        self.x_k_prime(x) - self.tau * self.k(x)
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha > 0.0
    }
}
