//! Discretized domain, degenerate diffusion, control regions and weights.

mod diffusion;
mod grid;
mod hardy;
mod region;
mod sigma;
mod weights;

pub use diffusion::{make_power_diffusion, DiffusionCoefficient};
pub use grid::{build_grid, Grid};
pub use hardy::{hardy_bound, hardy_poincare_ratio};
pub use region::{RegionLabel, RegionMask, Regions};
pub use sigma::{build_sigma, Sigma};
pub use weights::{
    build_weights, carleman_parameters, lambda_interval, parameter_lower_bounds, CarlemanParams, WeightSet,
};
