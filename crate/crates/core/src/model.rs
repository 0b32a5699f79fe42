use crate::domain::{DiffusionCoefficient, Grid, Regions};
use crate::error::Result;
use crate::pde::{assemble_operator, ParabolicOperator, Potential};

/// Grid, diffusion, operator and regions shared by every problem built on
/// one configuration. Immutable once built.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: Grid,
    pub diffusion: DiffusionCoefficient,
    pub op: ParabolicOperator,
    pub regions: Regions,
}

impl Model {
    pub fn new(grid: Grid, diffusion: DiffusionCoefficient, a0: Potential, regions: Regions) -> Result<Self> {
        let op = assemble_operator(&grid, &diffusion, a0)?;
        Ok(Model {
            grid,
            diffusion,
            op,
            regions,
        })
    }
}
