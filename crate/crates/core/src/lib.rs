//! Hierarchic (leader–follower) control of the weakly degenerate parabolic
//! equation
//!
//! ```text
//! y_t - (k(x) y_x)_x + a0 y = v·χ_O + h·χ_ω   in (0,T)×(0,1)
//! y(t,0) = y(t,1) = 0,   y(0,·) = g (unknown)
//! ```
//!
//! The follower `v` is a low-regret control tracking a target `z_d` on
//! `O_d` regardless of the missing initial datum; the leader `h` drives the
//! state to rest at time `T` through a penalized minimum-norm problem.
//!
//! Module map:
//! - [`domain`]: grid, regions, diffusion coefficient, Carleman weights,
//!   Hardy–Poincaré quotient.
//! - [`pde`]: fields, the flux-form operator, implicit time stepping and its
//!   exact discrete adjoint.
//! - [`follower`]: low-regret control by conjugate gradient.
//! - [`leader`]: penalized null control and the adjoint quartet.
//! - [`verify`]: empirical checks of the weighted inequalities.
//! - [`config`]: run configuration, profiles and region rasterization.
//! - [`export`]: CSV/JSON writers.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cg;
pub mod config;
pub mod domain;
pub mod error;
pub mod export;
pub mod follower;
pub mod leader;
pub mod model;
pub mod pde;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use model::Model;
