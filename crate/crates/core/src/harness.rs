//! Synthetic benchmarks, outlier injection, evaluation metrics and the
//! solution-range probe.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::clustering::{trimmed_cluster_cost, CenterSet};
use crate::coreset::Coreset;
use crate::error::{Error, Result};
use crate::points::{PointSet, Seed, WeightedPointSet};
use crate::regression::{trimmed_regression_cost, Hyperplane, RegionBox};
use crate::sampling::sample_without_replacement;
use crate::trim::{Power, TrimmedCostReport};

/// Perturbation law for injected outliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// `N(0, σ)` per coordinate.
    Gauss,
    /// `U[−σ, σ]` per coordinate.
    Uniform,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Gauss => "gauss",
            NoiseKind::Uniform => "uniform",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss" | "gaussian" | "normal" => Ok(NoiseKind::Gauss),
            "uniform" => Ok(NoiseKind::Uniform),
            _ => Err(Error::InvalidArgument(format!(
                "unknown distribution {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Planted {
    Centers(CenterSet),
    Plane(Hyperplane),
}

/// What the generator and injector planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Rows turned into outliers, ascending.
    pub outliers: Vec<usize>,
    pub planted: Option<Planted>,
    pub sigma: f64,
    pub distribution: NoiseKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynCluster {
    pub points: PointSet,
    pub centers: CenterSet,
    pub labels: Vec<usize>,
}

/// `k` centers uniform in `[0, 100]^d`; point `i` belongs to center
/// `i mod k` and is that center plus standard normal noise.
pub fn gen_syncluster(n: usize, d: usize, k: usize, seed: Seed) -> Result<SynCluster> {
    if k == 0 || n < k || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "syncluster needs n >= k >= 1 and d >= 1, got n = {n}, k = {k}, d = {d}"
        )));
    }
    let mut rng = seed.derive(0).rng();
    let box_ = Uniform::new_inclusive(0.0, 100.0).expect("valid range");
    let centers: Vec<f64> = (0..k * d).map(|_| box_.sample(&mut rng)).collect();
    let mut rng = seed.derive(1).rng();
    let mut coords = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let j = i % k;
        labels.push(j);
        for t in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            coords.push(centers[j * d + t] + z);
        }
    }
    Ok(SynCluster {
        points: PointSet::new(d, coords, false)?,
        centers: CenterSet::new(d, centers)?,
        labels,
    })
}

/// Coefficients uniform in `[−5, 5]^d`, features uniform in `[0, 10]^{d−1}`,
/// responses on the plane plus `N(0, 1)` noise.
pub fn gen_synregression(n: usize, d: usize, seed: Seed) -> Result<(PointSet, Hyperplane)> {
    if n == 0 || d < 2 {
        return Err(Error::InvalidArgument(format!(
            "synregression needs n >= 1 and d >= 2, got n = {n}, d = {d}"
        )));
    }
    let mut rng = seed.derive(0).rng();
    let coef = Uniform::new_inclusive(-5.0, 5.0).expect("valid range");
    let h: Vec<f64> = (0..d).map(|_| coef.sample(&mut rng)).collect();
    let feat = Uniform::new_inclusive(0.0, 10.0).expect("valid range");
    let mut rng = seed.derive(1).rng();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        let mut y = h[d - 1];
        for hj in &h[..d - 1] {
            let x = feat.sample(&mut rng);
            y += hj * x;
            coords.push(x);
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        coords.push(y + noise);
    }
    Ok((PointSet::new(d, coords, true)?, Hyperplane::new(h)?))
}

/// Perturbs every coordinate (response included) of `z` uniformly chosen
/// rows. Untouched rows are copied bit for bit.
pub fn inject_outliers(
    points: &PointSet,
    z: usize,
    distribution: NoiseKind,
    sigma: f64,
    seed: Seed,
) -> Result<(PointSet, GroundTruth)> {
    if z >= points.len() {
        return Err(Error::TooManyOutliers {
            z: z as f64,
            total: points.len() as f64,
        });
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    let chosen = sample_without_replacement(points.len(), z, seed.derive(0))?;
    let mut rng = seed.derive(1).rng();
    let mut out = points.clone();
    let d = points.dim();
    let coords = out.coords_mut();
    for &i in &chosen {
        for x in &mut coords[i * d..(i + 1) * d] {
            *x += match distribution {
                NoiseKind::Gauss => {
                    let s: f64 = StandardNormal.sample(&mut rng);
                    sigma * s
                }
                NoiseKind::Uniform => {
                    if sigma > 0.0 {
                        rng.random_range(-sigma..=sigma)
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    Ok((
        out,
        GroundTruth {
            outliers: chosen,
            planted: None,
            sigma,
            distribution,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub l1_loss: f64,
    pub l2_loss: f64,
    /// `|O ∩ O*| / z`; recall and precision coincide because `|O| = |O*|`.
    pub recall_precision: f64,
    /// `|S ∩ O*| / |O*|`.
    pub pre_recall: f64,
    pub construct_seconds: f64,
    pub solve_seconds: f64,
    /// No planted outliers; ratios were set to 1.
    pub empty_truth: bool,
}

/// Detection and retention scores of a run.
///
/// `predicted` is the outlier mass per point of the final solution; a
/// fractional boundary point counts with its outlier fraction.
pub fn eval_metrics(
    truth: &[usize],
    predicted: &[(usize, f64)],
    coreset_source: &[usize],
    losses: (f64, f64),
    timings: (f64, f64),
) -> MetricReport {
    let base = MetricReport {
        l1_loss: losses.0,
        l2_loss: losses.1,
        recall_precision: 1.0,
        pre_recall: 1.0,
        construct_seconds: timings.0,
        solve_seconds: timings.1,
        empty_truth: truth.is_empty(),
    };
    if truth.is_empty() {
        return base;
    }
    let mut truth_sorted = truth.to_vec();
    truth_sorted.sort_unstable();
    truth_sorted.dedup();
    let z = truth_sorted.len() as f64;
    let hit: f64 = predicted
        .iter()
        .filter(|(i, _)| truth_sorted.binary_search(i).is_ok())
        .map(|p| p.1)
        .sum();
    let mut kept = coreset_source.to_vec();
    kept.sort_unstable();
    let retained = truth_sorted
        .iter()
        .filter(|i| kept.binary_search(i).is_ok())
        .count();
    MetricReport {
        recall_precision: (hit / z).clamp(0.0, 1.0),
        pre_recall: retained as f64 / z,
        ..base
    }
}

/// The solution the range is centered on.
#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    Centers(CenterSet),
    Plane {
        plane: Hyperplane,
        region: RegionBox,
    },
}

impl Anchor {
    fn cost(&self, data: &WeightedPointSet, z: f64, power: Power) -> Result<TrimmedCostReport> {
        match self {
            Anchor::Centers(c) => trimmed_cluster_cost(data, c, z, power),
            Anchor::Plane { plane, .. } => trimmed_regression_cost(data, plane, z, power),
        }
    }
}

/// One solution drawn uniformly-ish from the range `anchor ± L`, together
/// with its actual range size (max center displacement, or max residual
/// shift over the feature box).
pub fn draw_in_range<R: Rng>(anchor: &Anchor, l: f64, rng: &mut R) -> Result<(Anchor, f64)> {
    match anchor {
        Anchor::Centers(c) => {
            let d = c.dim();
            let mut out = Vec::with_capacity(c.as_flat().len());
            let mut widest: f64 = 0.0;
            for center in c.iter() {
                let dir: Vec<f64> = (0..d)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                let u: f64 = rng.random();
                let radius = l * u.powf(1.0 / d as f64);
                let scale = if norm > 0.0 { radius / norm } else { 0.0 };
                let mut moved2 = 0.0;
                for (x, g) in center.iter().zip(&dir) {
                    let delta = g * scale;
                    moved2 += delta * delta;
                    out.push(x + delta);
                }
                widest = widest.max(moved2.sqrt());
            }
            Ok((Anchor::Centers(CenterSet::new(d, out)?), widest))
        }
        Anchor::Plane { plane, region } => {
            let d = plane.dim();
            let u: f64 = rng.random();
            let slope_cap = u * l / ((d - 1) as f64 * region.side);
            let offset_cap = l * (1.0 - u);
            let mut coeffs = Vec::with_capacity(d);
            let (mut up, mut down) = (0.0, 0.0);
            for &h in plane.slopes() {
                let delta = if slope_cap > 0.0 {
                    rng.random_range(-slope_cap..=slope_cap)
                } else {
                    0.0
                };
                up += delta.max(0.0) * region.side;
                down += delta.min(0.0) * region.side;
                coeffs.push(h + delta);
            }
            let delta = if offset_cap > 0.0 {
                rng.random_range(-offset_cap..=offset_cap)
            } else {
                0.0
            };
            coeffs.push(plane.intercept() + delta);
            // |Res shift| over the box peaks at a corner
            let widest = (up + delta).abs().max((down + delta).abs());
            Ok((
                Anchor::Plane {
                    plane: Hyperplane::new(coeffs)?,
                    region: *region,
                },
                widest,
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub range: f64,
    pub z: f64,
    pub power: Power,
    pub trials: usize,
    /// Falls back to the coreset's build parameter when unset.
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub max_abs_error: f64,
    /// `ε · (cost(P, anchor) + L)`.
    pub bound: f64,
    pub violations: usize,
    pub anchor_cost: f64,
    pub trials: usize,
    /// Largest range size among the drawn solutions; never above `L`.
    pub max_range_used: f64,
}

/// Compares coreset and full-data trimmed costs on random solutions from
/// the range `anchor ± L`.
pub fn range_probe(
    points: &PointSet,
    coreset: &Coreset,
    anchor: &Anchor,
    cfg: &ProbeConfig,
    seed: Seed,
) -> Result<ProbeReport> {
    let eps = cfg
        .eps
        .or(coreset.params().eps)
        .ok_or_else(|| Error::InvalidArgument("probe needs epsilon".into()))?;
    if !(cfg.range >= 0.0 && cfg.range.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "range size must be >= 0, got {}",
            cfg.range
        )));
    }
    let full = WeightedPointSet::unit(points.clone());
    let anchor_cost = anchor.cost(&full, cfg.z, cfg.power)?.cost;
    let bound = eps * (anchor_cost + cfg.range);

    let run = |t: usize| -> Result<(f64, f64)> {
        let mut rng = seed.derive(t as u64).rng();
        let (solution, used) = if t == 0 && cfg.range == 0.0 {
            (anchor.clone(), 0.0)
        } else {
            draw_in_range(anchor, cfg.range, &mut rng)?
        };
        if used > cfg.range * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "range sampler left the range: {used} > {}",
                cfg.range
            )));
        }
        let on_full = solution.cost(&full, cfg.z, cfg.power)?.cost;
        let on_core = solution.cost(coreset.data(), cfg.z, cfg.power)?.cost;
        Ok(((on_core - on_full).abs(), used))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(f64, f64)>> = {
        use rayon::prelude::*;
        (0..cfg.trials).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(f64, f64)>> = (0..cfg.trials).map(run).collect();

    let mut report = ProbeReport {
        max_abs_error: 0.0,
        bound,
        violations: 0,
        anchor_cost,
        trials: cfg.trials,
        max_range_used: 0.0,
    };
    for r in results {
        let (err, used) = r?;
        report.max_abs_error = report.max_abs_error.max(err);
        report.max_range_used = report.max_range_used.max(used);
        if err > bound {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Normal(0, σ) sampler shared by the demo front ends.
pub fn gaussian(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))
}
