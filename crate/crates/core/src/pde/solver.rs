use super::{space_inner, solve_tridiagonal, Field, ParabolicOperator};
use crate::error::{Error, Result};

/// Time discretization. Implicit Euler is the default and the only scheme
/// whose backward solve is the exact transpose of the forward one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    /// Forcing averaged over both ends of each step (reads source level 0).
    CrankNicolson,
}

fn check_slice(op: &ParabolicOperator, data: &[f64], what: &str) -> Result<()> {
    if data.len() != op.grid.n_nodes() {
        return Err(Error::config(format!(
            "{what} has {} entries, grid has {} nodes",
            data.len(),
            op.grid.n_nodes()
        )));
    }
    Ok(())
}

fn check_field(op: &ParabolicOperator, f: Option<&Field>) -> Result<()> {
    match f {
        Some(f) if !f.fits(&op.grid) => Err(Error::config("source field does not match the grid")),
        _ => Ok(()),
    }
}

/// Solves `z_t + L z = f`, `z(0) = g`, returning the whole trajectory.
pub fn solve_forward(op: &ParabolicOperator, g: &[f64], f: Option<&Field>) -> Result<Field> {
    solve_forward_with(op, g, f, Scheme::ImplicitEuler)
}

/// Solves `-z_t + L z = f`, `z(T) = z_T`, returning the trajectory on the
/// original time axis.
pub fn solve_backward(op: &ParabolicOperator, z_terminal: &[f64], f: Option<&Field>) -> Result<Field> {
    solve_backward_with(op, z_terminal, f, Scheme::ImplicitEuler)
}

pub fn solve_forward_with(op: &ParabolicOperator, g: &[f64], f: Option<&Field>, scheme: Scheme) -> Result<Field> {
    check_slice(op, g, "initial datum")?;
    check_field(op, f)?;
    let grid = &op.grid;
    let m = grid.n_x;
    let dt = grid.dt;
    let mut z = Field::zeros(grid);
    let mut cur = g.to_vec();
    cur[0] = 0.0;
    cur[m + 1] = 0.0;
    z.set_level(0, &cur);

    let mut scratch = vec![0.0; m];
    for n in 1..=grid.n_t {
        let mut rhs = match scheme {
            Scheme::ImplicitEuler => cur.clone(),
            Scheme::CrankNicolson => {
                let l = op.apply(n - 1, &cur);
                cur.iter().zip(&l).map(|(c, v)| c - 0.5 * dt * v).collect()
            }
        };
        if let Some(f) = f {
            let fnew = f.level(n);
            match scheme {
                Scheme::ImplicitEuler => {
                    for i in 1..=m {
                        rhs[i] += dt * fnew[i];
                    }
                }
                Scheme::CrankNicolson => {
                    let fold = f.level(n - 1);
                    for i in 1..=m {
                        rhs[i] += 0.5 * dt * (fnew[i] + fold[i]);
                    }
                }
            }
        }
        match scheme {
            Scheme::ImplicitEuler => op.solve_step(n, &mut rhs),
            Scheme::CrankNicolson => {
                let (s, d, u) = op.step_matrix(n, 0.5 * dt);
                solve_tridiagonal(&s, &d, &u, &mut rhs[1..=m], &mut scratch)?;
            }
        }
        rhs[0] = 0.0;
        rhs[m + 1] = 0.0;
        z.set_level(n, &rhs);
        cur = rhs;
    }
    Ok(z)
}

pub fn solve_backward_with(
    op: &ParabolicOperator,
    z_terminal: &[f64],
    f: Option<&Field>,
    scheme: Scheme,
) -> Result<Field> {
    check_slice(op, z_terminal, "terminal datum")?;
    check_field(op, f)?;
    let grid = &op.grid;
    let m = grid.n_x;
    let dt = grid.dt;
    let mut w = Field::zeros(grid);
    let mut cur = z_terminal.to_vec();
    cur[0] = 0.0;
    cur[m + 1] = 0.0;
    w.set_level(grid.n_t, &cur);

    let mut scratch = vec![0.0; m];
    for n in (1..=grid.n_t).rev() {
        let mut rhs = match scheme {
            Scheme::ImplicitEuler => cur.clone(),
            Scheme::CrankNicolson => {
                let l = op.apply(n, &cur);
                cur.iter().zip(&l).map(|(c, v)| c - 0.5 * dt * v).collect()
            }
        };
        if let Some(f) = f {
            let fnew = f.level(n);
            match scheme {
                Scheme::ImplicitEuler => {
                    for i in 1..=m {
                        rhs[i] += dt * fnew[i];
                    }
                }
                Scheme::CrankNicolson => {
                    let fold = f.level(n - 1);
                    for i in 1..=m {
                        rhs[i] += 0.5 * dt * (fnew[i] + fold[i]);
                    }
                }
            }
        }
        match scheme {
            Scheme::ImplicitEuler => op.solve_step(n, &mut rhs),
            Scheme::CrankNicolson => {
                let (s, d, u) = op.step_matrix(n - 1, 0.5 * dt);
                solve_tridiagonal(&s, &d, &u, &mut rhs[1..=m], &mut scratch)?;
            }
        }
        rhs[0] = 0.0;
        rhs[m + 1] = 0.0;
        w.set_level(n - 1, &rhs);
        cur = rhs;
    }
    Ok(w)
}

/// `|<z_f(T), w_T> - <f, w>_Q|` with `z_f` the forward solution from rest
/// and `w` the homogeneous backward solution from `w_T`; the `Q` pairing is
/// the one under which the two solvers are exact transposes.
pub fn duality_check(op: &ParabolicOperator, f: &Field, w_terminal: &[f64]) -> Result<f64> {
    let grid = &op.grid;
    let z = solve_forward(op, &vec![0.0; grid.n_nodes()], Some(f))?;
    let w = solve_backward(op, w_terminal, None)?;
    let lhs = space_inner(grid, z.terminal(), w_terminal);
    let rhs: f64 = (1..=grid.n_t)
        .map(|n| grid.dt * space_inner(grid, f.level(n), w.level(n - 1)))
        .sum();
    Ok((lhs - rhs).abs())
}
