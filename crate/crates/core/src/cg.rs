//! Conjugate gradient on [`Field`]s for the quadratic control problems.

use crate::error::{Error, Result};
use crate::pde::Field;

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Field,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Objective `½<x,Hx> - <b,x>` after each iterate, starting at `x0`.
    pub objective: Vec<f64>,
}

/// Solves `H x = b` for a symmetric positive definite `H` given as a
/// closure. `inner` is the product `H` is symmetric for; `stop(x, ‖r‖)`
/// decides convergence.
pub fn conjugate_gradient<A, I, S>(
    mut apply: A,
    b: &Field,
    x0: Field,
    inner: I,
    mut stop: S,
    max_iter: usize,
    solver: &'static str,
) -> Result<CgOutcome>
where
    A: FnMut(&Field) -> Result<Field>,
    I: Fn(&Field, &Field) -> f64,
    S: FnMut(&Field, f64) -> bool,
{
    let mut x = x0;
    let hx = apply(&x)?;
    let mut r = b.lincomb(1.0, -1.0, &hx);
    let mut objective = 0.5 * inner(&x, &hx) - inner(b, &x);
    let mut history = vec![objective];
    let mut rr = inner(&r, &r);
    let mut d = r.clone();
    let mut iterations = 0;

    while !stop(&x, rr.max(0.0).sqrt()) {
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                solver,
                iterations,
                residual: rr.sqrt(),
                hint: String::new(),
            });
        }
        let hd = apply(&d)?;
        let curvature = inner(&d, &hd);
        if !(curvature > 0.0) {
            return Err(Error::Numerical(format!(
                "{solver}: non-positive curvature {curvature:.3e} (operator not SPD)"
            )));
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &d);
        r.axpy(-alpha, &hd);
        objective -= 0.5 * alpha * rr;
        history.push(objective);
        let rr_new = inner(&r, &r);
        let beta = rr_new / rr;
        d = r.lincomb(1.0, beta, &d);
        rr = rr_new;
        iterations += 1;
    }
    Ok(CgOutcome {
        x,
        iterations,
        residual_norm: rr.max(0.0).sqrt(),
        objective: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_grid;

    #[test]
    fn diagonal_system() {
        let grid = build_grid(6, 3, 1.0).unwrap();
        let diag = Field::from_fn(&grid, |t, x| 1.0 + t + 5.0 * x);
        let b = Field::from_fn(&grid, |t, x| (t - x).sin());
        let inner = |a: &Field, c: &Field| a.values().iter().zip(c.values()).map(|(u, v)| u * v).sum::<f64>();
        let apply = |v: &Field| -> Result<Field> {
            let vals = v.values().iter().zip(diag.values()).map(|(a, d)| a * d).collect();
            Ok(Field::from_values(6, 3, vals))
        };
        let out = conjugate_gradient(apply, &b, Field::zeros(&grid), inner, |_, r| r < 1e-13, 100, "test").unwrap();
        for ((x, bb), d) in out.x.values().iter().zip(b.values()).zip(diag.values()) {
            if *d != 0.0 && *bb != 0.0 {
                assert!((x * d - bb).abs() < 1e-12);
            }
        }
        assert!(out.objective.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn iteration_cap_reported() {
        let grid = build_grid(6, 3, 1.0).unwrap();
        let b = Field::from_fn(&grid, |t, x| 1.0 + t * x);
        let inner = |a: &Field, c: &Field| a.values().iter().zip(c.values()).map(|(u, v)| u * v).sum::<f64>();
        let err = conjugate_gradient(|v| Ok(v.clone()), &b, Field::zeros(&grid), inner, |_, _| false, 0, "capped")
            .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { solver: "capped", .. }));
    }
}
