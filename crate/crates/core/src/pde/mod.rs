//! Flux-form discretization of `z ↦ -(k z_x)_x + a0 z` and implicit time
//! stepping in both time directions.
//!
//! Time-level convention. A forward solve stores the state at levels
//! `0..=n_t` and reads its source at levels `1..=n_t` (level `n` forces the
//! step `t_{n-1} → t_n`). A backward solve stores the state at levels
//! `0..=n_t` with the terminal datum at `n_t` and also reads its source at
//! levels `1..=n_t` (level `n` forces the step `t_n → t_{n-1}`). With the
//! rectangle rule over levels `1..=n_t` this makes the backward solver the
//! exact transpose of the forward one:
//!
//! ```text
//! <z(T), w(T)> - <z(0), w(0)> = dt Σ_{n≥1} ( <f^n, w^{n-1}> - <z^n, u^n> )
//! ```
//!
//! so a backward trajectory is paired with a forward source after the
//! one-level shift [`Field::to_source_levels`].

mod field;
mod norms;
mod operator;
mod solver;
mod tridiag;

pub use field::Field;
pub use norms::{norms, source_inner, source_norm_sq, space_inner, Norms, TimeRule};
pub use operator::{assemble_operator, ParabolicOperator, Potential};
pub use solver::{duality_check, solve_backward, solve_forward, Scheme};
pub use tridiag::solve_tridiagonal;
