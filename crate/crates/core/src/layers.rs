//! Layered partition around an anchor solution and the sampling step that
//! turns it into a coreset.
//!
//! The anchor distances (to the nearest anchor center, or absolute residuals
//! to the anchor hyperplane) are split into an outer set holding the
//! `m = ⌈(1 + 1/ε) z⌉` largest distances and `N + 1` geometric layers below
//! it: layer 0 is `[0, r]`, layer `i` is `(2^{i-1} r, 2^i r]`, with `2^N r`
//! equal to the largest distance left outside the outer set.

use serde::{Deserialize, Serialize};

use crate::coreset::{BuilderParams, Coreset, Origin};
use crate::error::{Error, Result};
use crate::numeric::robust_ceil;
use crate::points::{PointSet, Seed, WeightedPointSet};
use crate::sampling::sample_without_replacement;
use crate::select::select_top_m;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPartition {
    /// Radius `r` of the innermost layer.
    pub base_radius: f64,
    /// `N`; there are `N + 1` inner layers.
    pub n_layers: usize,
    /// Member indices of layers `0..=N`, ascending.
    pub layers: Vec<Vec<usize>>,
    /// Member indices of the outer set, ascending.
    pub outer: Vec<usize>,
    /// `⌈(1 + 1/ε) z⌉`.
    pub outer_target: usize,
}

impl LayerPartition {
    /// Outer radius `2^N r` of the last layer.
    pub fn outer_radius(&self) -> f64 {
        self.base_radius * 2f64.powi(self.n_layers as i32)
    }

    pub fn populations(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }
}

/// Outcome of the layering step.
#[derive(Debug, Clone, PartialEq)]
pub enum Layering {
    Partition(LayerPartition),
    /// `⌈(1 + 1/ε) z⌉ ≥ n`: the coreset is the whole input.
    FullSet,
}

/// `⌈(1 + 1/ε) z⌉`.
pub fn outer_count(z: usize, eps: f64) -> usize {
    robust_ceil((1.0 + 1.0 / eps) * z as f64) as usize
}

/// `N = ⌈log₂((n − z)/z)⌉`, at least 1.
pub fn default_layer_count(n: usize, z: usize) -> usize {
    debug_assert!(z > 0 && z < n);
    let inliers = (n - z) as u128;
    let z = z as u128;
    let mut layers = 0usize;
    while (z << layers) < inliers {
        layers += 1;
    }
    layers.max(1)
}

pub(crate) fn check_eps_eta(eps: f64, eta: Option<f64>) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1], got {eps}"
        )));
    }
    if let Some(eta) = eta {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "eta must lie in (0, 1), got {eta}"
            )));
        }
    }
    Ok(())
}

/// Partitions points by their anchor distances.
pub fn build_layers(
    distances: &[f64],
    z: usize,
    eps: f64,
    n_override: Option<usize>,
) -> Result<Layering> {
    check_eps_eta(eps, None)?;
    let n = distances.len();
    if z == 0 || z >= n {
        return Err(Error::InvalidArgument(format!(
            "layering needs 0 < z < n, got z = {z}, n = {n}"
        )));
    }
    let m = outer_count(z, eps);
    if m >= n {
        return Ok(Layering::FullSet);
    }
    let n_layers = n_override
        .unwrap_or_else(|| default_layer_count(n, z))
        .max(1);
    let (outer, threshold) = select_top_m(distances, m)?;
    let base_radius = threshold / 2f64.powi(n_layers as i32);

    let mut is_outer = vec![false; n];
    for &i in &outer {
        is_outer[i] = true;
    }
    let mut layers = vec![Vec::new(); n_layers + 1];
    for (i, &dist) in distances.iter().enumerate() {
        if !is_outer[i] {
            layers[layer_of(dist, base_radius, n_layers)].push(i);
        }
    }
    Ok(Layering::Partition(LayerPartition {
        base_radius,
        n_layers,
        layers,
        outer,
        outer_target: m,
    }))
}

/// Smallest `i` with `dist ≤ 2^i r`, clamped to `0..=n_layers`.
#[inline]
fn layer_of(dist: f64, r: f64, n_layers: usize) -> usize {
    let mut i = 0;
    let mut radius = r;
    while i < n_layers && dist > radius {
        i += 1;
        radius *= 2.0;
    }
    i
}

/// How many points to draw from each layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SampleSize {
    /// `⌈c · k d / ε² · ln(max(d/ε, 2)) · ln((N+1)/η)⌉` per layer.
    Theory { c: f64 },
    /// Fixed count per layer.
    PerLayer(usize),
    /// Total coreset size, outer set included; the sample budget is spread
    /// evenly over layers, small layers are taken whole.
    Total(usize),
}

impl Default for SampleSize {
    fn default() -> Self {
        SampleSize::Theory {
            c: DEFAULT_SAMPLE_CONSTANT,
        }
    }
}

pub const DEFAULT_SAMPLE_CONSTANT: f64 = 0.05;

/// Per-layer size from the sufficiency bound. `k = 1` for regression.
pub fn theory_target(c: f64, eps: f64, eta: f64, k: usize, d: usize, n_layers: usize) -> usize {
    let d = d as f64;
    let t = c / (eps * eps)
        * k as f64
        * d
        * (d / eps).max(2.0).ln()
        * ((n_layers as f64 + 1.0) / eta).ln();
    robust_ceil(t.max(1.0)) as usize
}

/// Equal shares of `budget` over layers of the given populations, with
/// layers smaller than their share taken whole and the remainder handed
/// out one by one from layer 0 upward.
pub(crate) fn water_fill(populations: &[usize], budget: usize) -> Vec<usize> {
    let mut take = vec![0usize; populations.len()];
    let mut open: Vec<usize> = (0..populations.len())
        .filter(|&i| populations[i] > 0)
        .collect();
    let mut left = budget;
    while !open.is_empty() && left > 0 {
        let share = left / open.len();
        let (small, big): (Vec<usize>, Vec<usize>) =
            open.iter().partition(|&&i| populations[i] <= share);
        if small.is_empty() {
            let mut extra = left - share * big.len();
            for &i in &big {
                take[i] = share + usize::from(extra > 0);
                extra = extra.saturating_sub(1);
            }
            break;
        }
        for &i in &small {
            take[i] = populations[i];
            left -= populations[i];
        }
        open = big;
    }
    take
}

/// Parameters of the layered construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayeredOptions {
    pub eps: f64,
    pub eta: f64,
    pub size: SampleSize,
    /// Replaces the default layer count `⌈log₂((n − z)/z)⌉`.
    pub n_layers: Option<usize>,
}

impl Default for LayeredOptions {
    fn default() -> Self {
        Self {
            eps: 0.2,
            eta: 0.1,
            size: SampleSize::default(),
            n_layers: None,
        }
    }
}

/// Dimensions entering the theoretical sample size.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ProblemShape {
    pub k: usize,
    pub d: usize,
}

pub(crate) struct LayeredRequest<'a> {
    pub points: &'a PointSet,
    pub distances: &'a [f64],
    pub z: usize,
    pub opts: &'a LayeredOptions,
    pub shape: ProblemShape,
    pub seed: Seed,
}

/// Samples every layer and keeps the outer set verbatim.
pub(crate) fn layered_coreset(req: LayeredRequest<'_>) -> Result<Coreset> {
    let LayeredOptions {
        eps,
        eta,
        size,
        n_layers,
    } = *req.opts;
    check_eps_eta(eps, Some(eta))?;
    let n = req.points.len();
    let partition = match build_layers(req.distances, req.z, eps, n_layers)? {
        Layering::FullSet => {
            log::info!("outer set covers all {n} points; returning the input as the coreset");
            let params = BuilderParams {
                eps: Some(eps),
                eta: Some(eta),
                layer_targets: Vec::new(),
                layer_populations: Vec::new(),
            };
            return Ok(Coreset::new(
                WeightedPointSet::unit(req.points.clone()),
                vec![Origin::Outer; n],
                (0..n).collect(),
                params,
            ));
        }
        Layering::Partition(p) => p,
    };
    let populations = partition.populations();
    log::debug!(
        "r = {}, N = {}, outer radius = {}, layer populations = {:?}",
        partition.base_radius,
        partition.n_layers,
        partition.outer_radius(),
        populations
    );
    let targets: Vec<usize> = match size {
        SampleSize::Theory { c } => {
            let t = theory_target(c, eps, eta, req.shape.k, req.shape.d, partition.n_layers);
            vec![t; populations.len()]
        }
        SampleSize::PerLayer(t) => vec![t; populations.len()],
        SampleSize::Total(total) => {
            if total < partition.outer_target {
                return Err(Error::InvalidArgument(format!(
                    "coreset size {total} is smaller than the outer set ({})",
                    partition.outer_target
                )));
            }
            water_fill(&populations, total - partition.outer_target)
        }
    };

    if let Some(i) = (0..populations.len()).find(|&i| populations[i] > 0 && targets[i] == 0) {
        return Err(Error::InvalidArgument(format!(
            "layer {i} holds {} points but receives no samples; total weight would not be conserved",
            populations[i]
        )));
    }

    let mut source = Vec::new();
    let mut weights = Vec::new();
    let mut origin = Vec::new();
    for (i, members) in partition.layers.iter().enumerate() {
        let pop = members.len();
        let take = targets[i].min(pop);
        if take == 0 {
            continue;
        }
        let weight = if take == pop {
            1.0
        } else {
            pop as f64 / take as f64
        };
        for pos in sample_without_replacement(pop, take, req.seed.derive(i as u64))? {
            source.push(members[pos]);
            weights.push(weight);
            origin.push(Origin::Layer(i as u32));
        }
    }
    for &i in &partition.outer {
        source.push(i);
        weights.push(1.0);
        origin.push(Origin::Outer);
    }
    let points = req.points.subset(&source)?;
    let params = BuilderParams {
        eps: Some(eps),
        eta: Some(eta),
        layer_targets: targets,
        layer_populations: populations,
    };
    Ok(Coreset::new(
        WeightedPointSet::new(points, weights)?,
        origin,
        source,
        params,
    ))
}
