//! Run configuration: JSON with `//` line comments.
//!
//! Every field except `grid`, `diffusion` and `regions` has a default, and
//! the fully resolved configuration serializes back to a file this parser
//! accepts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{
    build_grid, build_sigma, build_weights, carleman_parameters, make_power_diffusion, DiffusionCoefficient, Grid,
    RegionMask, Regions, WeightSet,
};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::pde::{Field, Potential};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_x: usize,
    pub n_t: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum A0Profile {
    /// `1 + x`
    OnePlusX,
    /// `1 + t`
    OnePlusT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum A0Config {
    Constant(f64),
    Profile { profile: A0Profile },
}

impl Default for A0Config {
    fn default() -> Self {
        A0Config::Constant(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsConfig {
    pub omega: [f64; 2],
    #[serde(rename = "O")]
    pub control: [f64; 2],
    #[serde(rename = "O_d")]
    pub observe: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FollowerConfig {
    pub gamma: f64,
    pub mu: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Decreasing list for `sweep-gamma`.
    pub gammas: Vec<f64>,
}

impl Default for FollowerConfig {
    fn default() -> Self {
        FollowerConfig {
            gamma: 1.0,
            mu: 10.0,
            tol: 1e-8,
            max_iter: 1000,
            gammas: vec![1.0, 1e-1, 1e-2, 1e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeaderConfig {
    pub epsilon: f64,
    /// Decreasing list for `sweep-eps`.
    pub eps_list: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Inner follower tolerance; `tol·1e-4` when absent.
    pub follower_tol: Option<f64>,
    pub quartet_tol: f64,
    pub relaxation: f64,
}

impl Default for LeaderConfig {
    fn default() -> Self {
        LeaderConfig {
            epsilon: 1e-2,
            eps_list: vec![1e-1, 1e-2, 1e-3, 1e-4],
            tol: 1e-8,
            max_iter: 1000,
            follower_tol: None,
            quartet_tol: 1e-13,
            relaxation: 1.0,
        }
    }
}

impl LeaderConfig {
    pub fn inner_tol(&self) -> f64 {
        self.follower_tol.unwrap_or(self.tol * 1e-4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsConfig {
    pub s: f64,
    pub seed: u64,
    /// Monte-Carlo samples per inequality.
    pub samples: usize,
    /// Left end of the band where the exponential orderings are scanned.
    pub alpha_cut: f64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            s: 1.0,
            seed: 42,
            samples: 100,
            alpha_cut: 0.1,
        }
    }
}

/// Built-in space–time profiles. Each is cut to zero for `t > t_cutoff`
/// and restricted to the region it is used on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// `A exp(-(x-c)²/w²)`
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
        t_cutoff: f64,
    },
    /// `A sin(f π x)`
    Sin {
        amplitude: f64,
        frequency: f64,
        t_cutoff: f64,
    },
    /// `A e^{-t} exp(-(x-c)²/w²)`
    Separable {
        amplitude: f64,
        center: f64,
        width: f64,
        t_cutoff: f64,
    },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Gaussian {
            amplitude: 1.0,
            center: 0.6,
            width: 0.1,
            t_cutoff: 0.5,
        }
    }
}

impl Profile {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Gaussian {
                amplitude,
                center,
                width,
                t_cutoff,
            } => {
                if t > t_cutoff {
                    0.0
                } else {
                    amplitude * (-((x - center) / width).powi(2)).exp()
                }
            }
            Profile::Sin {
                amplitude,
                frequency,
                t_cutoff,
            } => {
                if t > t_cutoff {
                    0.0
                } else {
                    amplitude * (frequency * std::f64::consts::PI * x).sin()
                }
            }
            Profile::Separable {
                amplitude,
                center,
                width,
                t_cutoff,
            } => {
                if t > t_cutoff {
                    0.0
                } else {
                    amplitude * (-t).exp() * (-((x - center) / width).powi(2)).exp()
                }
            }
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        match *self {
            Profile::Gaussian { width, .. } | Profile::Separable { width, .. } if !(width > 0.0) => {
                Err(Error::config(format!("field `{field}.width`: must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Samples the profile and zeroes it outside `mask`.
    pub fn sample(&self, grid: &Grid, mask: &RegionMask) -> Field {
        Field::from_fn(grid, |t, x| self.value(t, x)).masked(mask)
    }
}

/// Initial datum for `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    Zero,
    /// `A sin(πx)`
    Sin { amplitude: f64 },
    /// `A x^{3/2}(1-x)`
    Power { amplitude: f64 },
}

impl Default for InitialProfile {
    fn default() -> Self {
        InitialProfile::Sin { amplitude: 1.0 }
    }
}

impl InitialProfile {
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let mut g: Vec<f64> = grid
            .x
            .iter()
            .map(|&x| match *self {
                InitialProfile::Zero => 0.0,
                InitialProfile::Sin { amplitude } => amplitude * (std::f64::consts::PI * x).sin(),
                InitialProfile::Power { amplitude } => amplitude * x.powf(1.5) * (1.0 - x),
            })
            .collect();
        g[0] = 0.0;
        *g.last_mut().unwrap() = 0.0;
        g
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_h() -> Profile {
    Profile::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Written into run manifests; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub grid: GridConfig,
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub a0: A0Config,
    pub regions: RegionsConfig,
    #[serde(default)]
    pub follower: FollowerConfig,
    #[serde(default)]
    pub leader: LeaderConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub z_d: Profile,
    /// Leader control used by `follower`.
    #[serde(default = "default_h")]
    pub h: Profile,
    /// Initial datum used by `solve`.
    #[serde(default)]
    pub initial: InitialProfile,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// Removes `//` comments outside string literals, keeping line breaks so
/// parser positions still refer to the original text.
pub fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut in_string = false;
    let mut escaped = false;
    while let Some(c) = chars.next() {
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        if c == '"' {
            in_string = true;
            out.push(c);
        } else if c == '/' && chars.peek() == Some(&'/') {
            for rest in chars.by_ref() {
                if rest == '\n' {
                    out.push('\n');
                    break;
                }
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn positive(value: f64, field: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("field `{field}`: must be positive, got {value}")))
    }
}

fn decreasing(values: &[f64], field: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(format!("field `{field}`: must not be empty")));
    }
    for &v in values {
        positive(v, field)?;
    }
    if values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::config(format!("field `{field}`: must be strictly decreasing")));
    }
    Ok(())
}

fn interval(iv: [f64; 2], field: &str) -> Result<()> {
    if !(0.0 <= iv[0] && iv[0] < iv[1] && iv[1] <= 1.0) {
        return Err(Error::config(format!(
            "field `{field}`: expected 0 <= lo < hi <= 1, got [{}, {}]",
            iv[0], iv[1]
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cleaned = strip_comments(text);
        let cfg: RunConfig = serde_json::from_str(&cleaned)
            .map_err(|e| {
                let (line, column) = (e.line(), e.column());
                let msg = e.to_string();
                let msg = msg.strip_suffix(&format!(" at line {line} column {column}")).unwrap_or(&msg);
                Error::config(format!("line {line}, column {column}: {msg}"))
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.n_x == 0 || self.grid.n_t == 0 {
            return Err(Error::config("field `grid`: n_x and n_t must be positive"));
        }
        positive(self.grid.horizon, "grid.T")?;
        if !(0.0..1.0).contains(&self.diffusion.alpha) {
            return Err(Error::config(format!(
                "field `diffusion.alpha`: must lie in [0, 1), got {}",
                self.diffusion.alpha
            )));
        }
        if let A0Config::Constant(a) = self.a0 {
            if !a.is_finite() {
                return Err(Error::config("field `a0`: must be finite"));
            }
        }
        interval(self.regions.omega, "regions.omega")?;
        interval(self.regions.control, "regions.O")?;
        interval(self.regions.observe, "regions.O_d")?;
        positive(self.follower.gamma, "follower.gamma")?;
        positive(self.follower.mu, "follower.mu")?;
        positive(self.follower.tol, "follower.tol")?;
        decreasing(&self.follower.gammas, "follower.gammas")?;
        positive(self.leader.epsilon, "leader.epsilon")?;
        decreasing(&self.leader.eps_list, "leader.eps_list")?;
        positive(self.leader.tol, "leader.tol")?;
        positive(self.leader.inner_tol(), "leader.follower_tol")?;
        positive(self.leader.quartet_tol, "leader.quartet_tol")?;
        if !(self.leader.relaxation > 0.0 && self.leader.relaxation <= 1.0) {
            return Err(Error::config("field `leader.relaxation`: must lie in (0, 1]"));
        }
        positive(self.weights.s, "weights.s")?;
        if !(self.weights.alpha_cut > 0.0 && self.weights.alpha_cut < 1.0) {
            return Err(Error::config("field `weights.alpha_cut`: must lie in (0, 1)"));
        }
        self.z_d.validate("z_d")?;
        self.h.validate("h")?;
        Ok(())
    }

    /// Resolved copy stamped with a version, for run manifests.
    pub fn manifest(&self, version: &str) -> RunConfig {
        RunConfig {
            version: Some(version.to_string()),
            leader: LeaderConfig {
                follower_tol: Some(self.leader.inner_tol()),
                ..self.leader.clone()
            },
            ..self.clone()
        }
    }

    pub fn build_grid(&self) -> Result<Grid> {
        build_grid(self.grid.n_x, self.grid.n_t, self.grid.horizon)
    }

    pub fn diffusion(&self) -> Result<DiffusionCoefficient> {
        make_power_diffusion(self.diffusion.alpha)
    }

    pub fn potential(&self, grid: &Grid) -> Potential {
        match self.a0 {
            A0Config::Constant(a) => Potential::Constant(a),
            A0Config::Profile { profile } => Potential::Sampled(Field::from_values(
                grid.n_x,
                grid.n_t,
                grid.t
                    .iter()
                    .flat_map(|&t| {
                        grid.x.iter().map(move |&x| match profile {
                            A0Profile::OnePlusX => 1.0 + x,
                            A0Profile::OnePlusT => 1.0 + t,
                        })
                    })
                    .collect(),
            )),
        }
    }

    pub fn model(&self) -> Result<Model> {
        let grid = self.build_grid()?;
        let regions = rasterize_regions(self, &grid)?;
        let a0 = self.potential(&grid);
        Model::new(grid, self.diffusion()?, a0, regions)
    }

    pub fn target(&self, model: &Model) -> Field {
        self.z_d.sample(&model.grid, &model.regions.observe)
    }

    pub fn leader_control(&self, model: &Model) -> Field {
        self.h.sample(&model.grid, &model.regions.omega).masked_source(&model.regions.omega)
    }

    pub fn weights(&self, model: &Model) -> Result<WeightSet> {
        let sigma = build_sigma(&model.grid, &model.regions.omega_0)?;
        let params = carleman_parameters(&model.diffusion, sigma.sup())?;
        build_weights(&model.grid, &model.diffusion, &sigma, &params, self.weights.s)
    }
}

/// Region intervals to node masks, with `ω_0 ⋐ ω_1 ⋐ ω_2 ⋐ O_d ∩ ω`
/// obtained by shrinking the intersection by 3, 2 and 1 nodes.
pub fn rasterize_regions(cfg: &RunConfig, grid: &Grid) -> Result<Regions> {
    let r = &cfg.regions;
    Regions::rasterize(
        grid,
        (r.omega[0], r.omega[1]),
        (r.control[0], r.control[1]),
        (r.observe[0], r.observe[1]),
    )
}
