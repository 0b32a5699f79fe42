//! CSV and JSON writers. Column sets are fixed; numbers use the shortest
//! round-trip formatting so repeated runs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::domain::{Grid, WeightSet};
use crate::error::{Error, Result};
use crate::follower::GammaSweep;
use crate::leader::{EpsRow, EpsilonSweep};
use crate::pde::Field;
use crate::verify::InequalityReport;

pub const FIELD_COLUMNS: [&str; 3] = ["t", "x", "value"];
pub const WEIGHT_COLUMNS: [&str; 7] = ["t", "x", "Theta", "phi_w", "Phi", "kappa", "eta_hat_inv_sq"];
pub const EPS_COLUMNS: [&str; 5] = ["epsilon", "norm_h", "norm_yT_sq", "J_eps", "outer_iters"];
pub const GAMMA_COLUMNS: [&str; 7] = [
    "gamma",
    "norm_v",
    "norm_S0",
    "S0_over_sqrt_gamma",
    "J_gamma",
    "residual",
    "iterations",
];
pub const RATIO_COLUMNS: [&str; 3] = ["inequality", "sample", "ratio"];

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

/// Shortest round-trip form, switching to exponent notation for very
/// small or large magnitudes.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    Ok(w)
}

fn row<const N: usize>(w: &mut csv::Writer<File>, values: [String; N]) -> Result<()> {
    w.write_record(&values).map_err(csv_error)
}

/// One row per grid node and level, boundary nodes included.
pub fn write_field_csv(path: &Path, grid: &Grid, field: &Field) -> Result<()> {
    if !field.fits(grid) {
        return Err(Error::config("field does not match the grid"));
    }
    let mut w = writer(path, &FIELD_COLUMNS)?;
    for n in 0..grid.n_levels() {
        for (i, v) in field.level(n).iter().enumerate() {
            row(&mut w, [num(grid.t[n]), num(grid.x[i]), num(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_weights_csv(path: &Path, grid: &Grid, weights: &WeightSet) -> Result<()> {
    let mut w = writer(path, &WEIGHT_COLUMNS)?;
    let width = grid.n_nodes();
    for n in 0..grid.n_levels() {
        for i in 0..width {
            let k = n * width + i;
            row(
                &mut w,
                [
                    num(grid.t[n]),
                    num(grid.x[i]),
                    num(weights.theta[n]),
                    num(weights.phi_w[k]),
                    num(weights.big_phi[k]),
                    num(weights.kappa[n]),
                    num(weights.eta_hat_inv_sq[k]),
                ],
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_eps_sweep_csv(path: &Path, sweep: &EpsilonSweep) -> Result<()> {
    write_eps_rows_csv(path, &sweep.rows)
}

pub fn write_eps_rows_csv(path: &Path, rows: &[EpsRow]) -> Result<()> {
    let mut w = writer(path, &EPS_COLUMNS)?;
    for r in rows {
        row(
            &mut w,
            [
                num(r.epsilon),
                num(r.norm_h),
                num(r.norm_y_t_sq),
                num(r.j_eps),
                r.outer_iters.to_string(),
            ],
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gamma_sweep_csv(path: &Path, sweep: &GammaSweep) -> Result<()> {
    let mut w = writer(path, &GAMMA_COLUMNS)?;
    for r in &sweep.rows {
        row(
            &mut w,
            [
                num(r.gamma),
                num(r.v_norm),
                num(r.s0_norm),
                num(r.s0_over_sqrt_gamma),
                num(r.j_gamma),
                num(r.residual),
                r.iterations.to_string(),
            ],
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Per-sample ratios of several reports in long format.
pub fn write_ratios_csv(path: &Path, reports: &[&InequalityReport]) -> Result<()> {
    let mut w = writer(path, &RATIO_COLUMNS)?;
    for rep in reports {
        for (j, r) in rep.ratios.iter().enumerate() {
            row(&mut w, [rep.name.clone(), j.to_string(), num(*r)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
