use crate::error::{Error, Result};

/// Thomas algorithm for `sub[i]·x[i-1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`.
///
/// `sub[0]` and `sup[n-1]` are ignored. `rhs` is overwritten with the
/// solution; `scratch` must hold at least `n` entries.
pub fn solve_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = rhs.len();
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::Numerical("singular tridiagonal system (row 0)".into()));
    }
    rhs[0] /= pivot;
    for i in 1..n {
        scratch[i - 1] = sup[i - 1] / pivot;
        pivot = diag[i] - sub[i] * scratch[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Numerical(format!("singular tridiagonal system (row {i})")));
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
    Ok(())
}
