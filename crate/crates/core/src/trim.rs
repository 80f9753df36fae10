//! Trimmed objectives shared by clustering and regression.
//!
//! Given a per-point distance (to the nearest center, or the absolute
//! residual to a hyperplane) and per-point weights, the outlier mass `z` is
//! peeled off the largest distances, splitting at most one boundary point,
//! and the remaining mass is averaged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::select::trim_heaviest;

/// Loss exponent: 1 for median-type objectives, 2 for means/least squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Power {
    L1,
    L2,
}

impl Power {
    #[inline]
    pub fn apply(self, dist: f64) -> f64 {
        match self {
            Power::L1 => dist,
            Power::L2 => dist * dist,
        }
    }

    pub fn exponent(self) -> u8 {
        match self {
            Power::L1 => 1,
            Power::L2 => 2,
        }
    }
}

impl TryFrom<u8> for Power {
    type Error = Error;
    fn try_from(p: u8) -> Result<Self> {
        match p {
            1 => Ok(Power::L1),
            2 => Ok(Power::L2),
            other => Err(Error::InvalidArgument(format!(
                "power must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// Objective value of a solution together with the inlier/outlier split it
/// induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimmedCostReport {
    /// Trimmed cost normalized by the inlier mass `W - z`.
    pub cost: f64,
    pub inlier_weight: f64,
    /// Removed mass per point, sorted by index. Sums to `z`.
    pub outliers: Vec<(usize, f64)>,
    /// Nearest center of every point (empty for regression).
    pub assignment: Vec<usize>,
    /// Distance (or absolute residual) of every point.
    pub distances: Vec<f64>,
}

impl TrimmedCostReport {
    /// Outlier mass assigned to point `i`.
    pub fn outlier_mass(&self, i: usize) -> f64 {
        self.outliers
            .binary_search_by_key(&i, |&(j, _)| j)
            .map_or(0.0, |pos| self.outliers[pos].1)
    }

    /// Remaining inlier mass of every point.
    pub fn inlier_masses(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = weights.to_vec();
        for &(i, o) in &self.outliers {
            out[i] = (out[i] - o).max(0.0);
        }
        out
    }

    /// Total removed mass.
    pub fn outlier_weight(&self) -> f64 {
        self.outliers.iter().map(|p| p.1).sum()
    }
}

pub(crate) fn check_outlier_mass(z: f64, total: f64) -> Result<()> {
    if !z.is_finite() || z < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "outlier mass must be >= 0, got {z}"
        )));
    }
    if z >= total {
        return Err(Error::TooManyOutliers { z, total });
    }
    Ok(())
}

/// Builds the trimmed report from precomputed distances.
pub(crate) fn trimmed_report(
    distances: Vec<f64>,
    weights: &[f64],
    total: f64,
    z: f64,
    power: Power,
    assignment: Vec<usize>,
) -> Result<TrimmedCostReport> {
    check_outlier_mass(z, total)?;
    let outliers = trim_heaviest(&distances, weights, z);
    let mut removed = vec![0.0; weights.len()];
    for &(i, o) in &outliers {
        removed[i] = o;
    }
    let mut acc = CompensatedSum::new();
    for ((&dist, &w), &o) in distances.iter().zip(weights).zip(&removed) {
        let keep = w - o;
        if keep > 0.0 {
            acc.add(keep * power.apply(dist));
        }
    }
    let inlier_weight = total - z;
    Ok(TrimmedCostReport {
        cost: acc.value() / inlier_weight,
        inlier_weight,
        outliers,
        assignment,
        distances,
    })
}
