use serde::Serialize;

use super::Grid;
use crate::error::{Error, Result};

/// Minimum number of nodes in `O_d ∩ ω` before the nested subregions can be
/// carved out of it.
pub const MIN_INTERSECTION_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    Omega,
    Control,
    Observe,
    Omega0,
    Omega1,
    Omega2,
}

impl RegionLabel {
    pub fn name(self) -> &'static str {
        match self {
            RegionLabel::Omega => "omega",
            RegionLabel::Control => "O",
            RegionLabel::Observe => "O_d",
            RegionLabel::Omega0 => "omega_0",
            RegionLabel::Omega1 => "omega_1",
            RegionLabel::Omega2 => "omega_2",
        }
    }
}

/// Indicator of a node set. Boundary nodes are never members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMask {
    pub indicator: Vec<bool>,
    pub label: RegionLabel,
}

impl RegionMask {
    /// Nodes lying strictly inside the open interval `(lo, hi)`.
    pub fn from_interval(grid: &Grid, lo: f64, hi: f64, label: RegionLabel) -> Result<Self> {
        if !(0.0..1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
            return Err(Error::region(format!(
                "{} interval ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1",
                label.name()
            )));
        }
        let tol = 1e-9 * grid.dx;
        let indicator = grid
            .x
            .iter()
            .enumerate()
            .map(|(i, &x)| i > 0 && i <= grid.n_x && x > lo + tol && x < hi - tol)
            .collect();
        let mask = RegionMask { indicator, label };
        if mask.count() == 0 {
            return Err(Error::region(format!(
                "{} interval ({lo}, {hi}) contains no grid node",
                label.name()
            )));
        }
        Ok(mask)
    }

    pub fn from_indicator(indicator: Vec<bool>, label: RegionLabel) -> Self {
        RegionMask { indicator, label }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indicator[i]
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.indicator
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// `1.0` on members, `0.0` elsewhere.
    pub fn weights(&self) -> Vec<f64> {
        self.indicator.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.indicator
            .iter()
            .zip(&other.indicator)
            .all(|(&a, &b)| !a || b)
    }

    pub fn is_strict_subset_of(&self, other: &RegionMask) -> bool {
        self.is_subset_of(other) && self.count() < other.count()
    }

    /// Discrete compact inclusion: every member and both its neighbours
    /// belong to `other`.
    pub fn is_compactly_inside(&self, other: &RegionMask) -> bool {
        let n = self.indicator.len();
        self.nodes()
            .all(|i| i > 0 && i + 1 < n && other.contains(i - 1) && other.contains(i) && other.contains(i + 1))
    }

    pub fn intersection(&self, other: &RegionMask, label: RegionLabel) -> RegionMask {
        let indicator = self
            .indicator
            .iter()
            .zip(&other.indicator)
            .map(|(&a, &b)| a && b)
            .collect();
        RegionMask { indicator, label }
    }

    /// Drops `margin` nodes from each end of every contiguous run.
    pub fn shrink(&self, margin: usize, label: RegionLabel) -> RegionMask {
        let n = self.indicator.len();
        let indicator = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(margin);
                let hi = i + margin;
                i >= margin && hi < n && (lo..=hi).all(|j| self.indicator[j])
            })
            .collect();
        RegionMask { indicator, label }
    }

    /// Smallest and largest member node.
    pub fn span(&self) -> Option<(usize, usize)> {
        let first = self.nodes().next()?;
        let last = self.nodes().last()?;
        Some((first, last))
    }
}

/// The control, observation and auxiliary regions of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regions {
    /// Leader control region ω.
    pub omega: RegionMask,
    /// Follower control region O.
    pub control: RegionMask,
    /// Follower observation region O_d.
    pub observe: RegionMask,
    pub omega_0: RegionMask,
    pub omega_1: RegionMask,
    pub omega_2: RegionMask,
}

impl Regions {
    /// Rasterizes `ω`, `O`, `O_d` given as open intervals and derives the
    /// nested sets `ω_0 ⋐ ω_1 ⋐ ω_2 ⋐ O_d ∩ ω` by trimming 3, 2 and 1 nodes.
    pub fn rasterize(
        grid: &Grid,
        omega: (f64, f64),
        control: (f64, f64),
        observe: (f64, f64),
    ) -> Result<Self> {
        let omega = RegionMask::from_interval(grid, omega.0, omega.1, RegionLabel::Omega)?;
        let control = RegionMask::from_interval(grid, control.0, control.1, RegionLabel::Control)?;
        let observe = RegionMask::from_interval(grid, observe.0, observe.1, RegionLabel::Observe)?;
        Self::from_masks(omega, control, observe)
    }

    pub fn from_masks(omega: RegionMask, control: RegionMask, observe: RegionMask) -> Result<Self> {
        if !omega.is_strict_subset_of(&control) {
            return Err(Error::region(
                "leader region omega must be a strict subset of the follower region O",
            ));
        }
        let meet = observe.intersection(&omega, RegionLabel::Omega2);
        if meet.count() == 0 {
            return Err(Error::region("O_d and omega are disjoint; the leader cannot observe"));
        }
        if meet.count() < MIN_INTERSECTION_NODES {
            return Err(Error::region(format!(
                "O_d ∩ omega has {} nodes (< {MIN_INTERSECTION_NODES}); refine grid or widen regions",
                meet.count()
            )));
        }
        let omega_2 = meet.shrink(1, RegionLabel::Omega2);
        let omega_1 = meet.shrink(2, RegionLabel::Omega1);
        let omega_0 = meet.shrink(3, RegionLabel::Omega0);
        let regions = Regions {
            omega,
            control,
            observe,
            omega_0,
            omega_1,
            omega_2,
        };
        regions.validate()?;
        Ok(regions)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_strict_subset_of(&self.control) {
            return Err(Error::region("omega ⊊ O violated"));
        }
        let meet = self.observe.intersection(&self.omega, RegionLabel::Omega2);
        if meet.count() == 0 {
            return Err(Error::region("omega ∩ O_d is empty"));
        }
        let ok = self.omega_0.count() > 0
            && self.omega_0.is_compactly_inside(&self.omega_1)
            && self.omega_1.is_compactly_inside(&meet)
            && self.omega_1.is_compactly_inside(&self.omega_2)
            && self.omega_2.is_compactly_inside(&meet);
        if !ok {
            return Err(Error::region("nested subregions violate omega_0 ⋐ omega_1 ⋐ omega_2 ⋐ O_d ∩ omega"));
        }
        Ok(())
    }
}
