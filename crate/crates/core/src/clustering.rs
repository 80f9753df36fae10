//! k-median/means clustering with outliers: trimmed objective, layered
//! coreset, the k-means-- alternating solver and local-search seeding.

use serde::{Deserialize, Serialize};

use crate::coreset::Coreset;
use crate::distance::{nearest, nearest_centers, sq_dist};
use crate::error::{Error, Result};
use crate::layers::{
    build_layers, layered_coreset, LayeredOptions, LayeredRequest, Layering, ProblemShape,
};
use crate::numeric::CompensatedSum;
use crate::points::{PointSet, Seed, WeightedPointSet};
use crate::sampling::sample_without_replacement;
use crate::select::trim_heaviest;
use crate::trim::{trimmed_report, Power, TrimmedCostReport};

/// `k` centers in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    d: usize,
    centers: Vec<f64>,
}

impl CenterSet {
    pub fn new(d: usize, centers: Vec<f64>) -> Result<Self> {
        if d == 0 || centers.is_empty() {
            return Err(Error::EmptyCenters);
        }
        if !centers.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: centers.len() % d,
            });
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "center coordinates must be finite".into(),
            ));
        }
        Ok(Self { d, centers })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().ok_or(Error::EmptyCenters)?.as_ref().len();
        let mut flat = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.as_ref().len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: r.as_ref().len(),
                });
            }
            flat.extend_from_slice(r.as_ref());
        }
        Self::new(d, flat)
    }

    pub fn k(&self) -> usize {
        self.centers.len() / self.d
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.d..(j + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.centers.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.centers
    }
}

/// Trimmed clustering cost `K_power^{-z}(W, C)`.
///
/// Outlier mass `z` is removed from the points farthest from `C`; the
/// remaining weighted distances (squared for [`Power::L2`]) are averaged
/// over `W − z`.
pub fn trimmed_cluster_cost(
    data: &WeightedPointSet,
    centers: &CenterSet,
    z: f64,
    power: Power,
) -> Result<TrimmedCostReport> {
    let (assignment, distances) = nearest_centers(data.points(), centers.as_flat(), centers.dim())?;
    trimmed_report(
        distances,
        data.weights(),
        data.total_weight(),
        z,
        power,
        assignment,
    )
}

/// Layer partition around the anchor centers.
pub fn build_layers_clustering(
    points: &PointSet,
    anchor: &CenterSet,
    z: usize,
    eps: f64,
    n_layers: Option<usize>,
) -> Result<Layering> {
    let dist = crate::distance::min_distances(points, anchor.as_flat(), anchor.dim())?;
    build_layers(&dist, z, eps, n_layers)
}

/// Layered-sampling coreset for clustering with `z` outliers.
pub fn layered_coreset_clustering(
    points: &PointSet,
    anchor: &CenterSet,
    z: usize,
    opts: &LayeredOptions,
    seed: Seed,
) -> Result<Coreset> {
    let dist = crate::distance::min_distances(points, anchor.as_flat(), anchor.dim())?;
    layered_coreset(LayeredRequest {
        points,
        distances: &dist,
        z,
        opts,
        shape: ProblemShape {
            k: anchor.k(),
            d: points.dim(),
        },
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once the relative cost improvement drops below this.
    pub tol: f64,
    pub power: Power,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
            power: Power::L2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOutcome {
    pub centers: CenterSet,
    pub report: TrimmedCostReport,
    /// Number of center updates performed.
    pub iterations: usize,
    /// Trimmed cost before the first update and after each update.
    pub cost_history: Vec<f64>,
    /// Number of clusters re-seeded after losing all their mass.
    pub reseeded: usize,
}

/// k-means-- (k-median-- for [`Power::L1`]): alternate between trimming the
/// `z` farthest mass and moving every center to its cluster's inlier mass.
///
/// Centers move to the weighted mean (L2) or to the coordinate-wise weighted
/// median (L1); an L1 move is kept only if it lowers that cluster's cost. A
/// center left without inlier mass jumps to the farthest remaining inlier.
pub fn kmeans_minus_minus(
    data: &WeightedPointSet,
    z: f64,
    init: &CenterSet,
    opts: &KMeansOptions,
) -> Result<KMeansOutcome> {
    if init.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: init.dim(),
        });
    }
    let mut centers = init.clone();
    let mut report = trimmed_cluster_cost(data, &centers, z, opts.power)?;
    let mut history = vec![report.cost];
    let mut iterations = 0;
    let mut reseeded = 0;
    while iterations < opts.max_iter {
        let masses = report.inlier_masses(data.weights());
        let (next, fresh) = update_centers(data.points(), &centers, &report, &masses, opts.power)?;
        iterations += 1;
        reseeded += fresh;
        let next_report = trimmed_cluster_cost(data, &next, z, opts.power)?;
        let gain = report.cost - next_report.cost;
        let previous = report.cost;
        centers = next;
        report = next_report;
        history.push(report.cost);
        if previous <= 0.0 || gain <= opts.tol * previous {
            break;
        }
    }
    Ok(KMeansOutcome {
        centers,
        report,
        iterations,
        cost_history: history,
        reseeded,
    })
}

fn update_centers(
    points: &PointSet,
    centers: &CenterSet,
    report: &TrimmedCostReport,
    masses: &[f64],
    power: Power,
) -> Result<(CenterSet, usize)> {
    let (k, d) = (centers.k(), centers.dim());
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut cluster_mass = vec![0.0; k];
    for (i, &m) in masses.iter().enumerate() {
        if m > 0.0 {
            let j = report.assignment[i];
            members[j].push(i);
            cluster_mass[j] += m;
        }
    }
    let mut next = centers.as_flat().to_vec();
    for j in 0..k {
        if members[j].is_empty() {
            continue;
        }
        let slot = &mut next[j * d..(j + 1) * d];
        match power {
            Power::L2 => {
                for (t, v) in slot.iter_mut().enumerate() {
                    let s: CompensatedSum = members[j]
                        .iter()
                        .map(|&i| masses[i] * points.row(i)[t])
                        .collect();
                    *v = s.value() / cluster_mass[j];
                }
            }
            Power::L1 => {
                let candidate: Vec<f64> = (0..d)
                    .map(|t| {
                        weighted_median(members[j].iter().map(|&i| (points.row(i)[t], masses[i])))
                    })
                    .collect();
                let cost_at = |c: &[f64]| -> f64 {
                    members[j]
                        .iter()
                        .map(|&i| masses[i] * sq_dist(points.row(i), c).sqrt())
                        .collect::<CompensatedSum>()
                        .value()
                };
                if cost_at(&candidate) < cost_at(centers.center(j)) {
                    slot.copy_from_slice(&candidate);
                }
            }
        }
    }

    // empty clusters take the farthest inlier points, in rank order
    let empty: Vec<usize> = (0..k).filter(|&j| members[j].is_empty()).collect();
    if !empty.is_empty() {
        let ranked: Vec<f64> = report
            .distances
            .iter()
            .zip(masses)
            .map(|(&dist, &m)| if m > 0.0 { dist } else { -1.0 })
            .collect();
        let unit = vec![1.0; ranked.len()];
        let picks = trim_heaviest(&ranked, &unit, empty.len().min(ranked.len()) as f64);
        let mut picks: Vec<usize> = picks.into_iter().map(|p| p.0).collect();
        picks.sort_by(|&a, &b| ranked[b].total_cmp(&ranked[a]).then(a.cmp(&b)));
        for (&j, &i) in empty.iter().zip(&picks) {
            if ranked[i] < 0.0 {
                break;
            }
            log::debug!("center {j} lost all mass; re-seeding at point {i}");
            next[j * d..(j + 1) * d].copy_from_slice(points.row(i));
        }
    }
    Ok((CenterSet::new(d, next)?, empty.len()))
}

/// Lower weighted median of `(value, weight)` pairs with positive total weight.
pub(crate) fn weighted_median<I: Iterator<Item = (f64, f64)>>(items: I) -> f64 {
    let mut v: Vec<(f64, f64)> = items.collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = v.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(x, w) in &v {
        acc += w;
        if acc >= 0.5 * total {
            return x;
        }
    }
    v.last().map_or(0.0, |p| p.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSearchOptions {
    /// The sample holds `sample_factor · k` points.
    pub sample_factor: usize,
    /// Accepted swaps are capped at `swap_budget_factor · k`.
    pub swap_budget_factor: usize,
    pub power: Power,
}

impl Default for LocalSearchOptions {
    fn default() -> Self {
        Self {
            sample_factor: 40,
            swap_budget_factor: 100,
            power: Power::L2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchSeed {
    pub centers: CenterSet,
    /// Source rows of the sample the search ran on.
    pub sample: Vec<usize>,
    /// Source rows chosen as centers.
    pub center_rows: Vec<usize>,
    pub swaps: usize,
    /// Outlier count used on the sample.
    pub sample_outliers: usize,
    /// Set when the sample had fewer than `k` distinct points.
    pub has_duplicates: bool,
}

/// Outliers expected in a uniform sample of `s` out of `n` points, padded by
/// three standard deviations so the sample trim rarely leaves a planted
/// outlier in play.
pub fn sample_outlier_count(z: usize, s: usize, n: usize) -> usize {
    if z == 0 || s == 0 {
        return 0;
    }
    let mu = z as f64 * s as f64 / n as f64;
    let padded = (mu + 3.0 * mu.sqrt()).ceil() as usize;
    padded.min(z).min(s.saturating_sub(1))
}

/// Initial centers by single-swap local search with outliers on a small
/// uniform sample.
///
/// Starts from a farthest-point sweep over the sample, then repeatedly
/// swaps one center for one sample point when the trimmed sample cost
/// drops below `(1 − 1/k)` times its current value (any strict drop when
/// `k = 1`).
pub fn local_search_outliers_seed(
    points: &PointSet,
    k: usize,
    z: usize,
    opts: &LocalSearchOptions,
    seed: Seed,
) -> Result<LocalSearchSeed> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = points.len();
    let s = (opts.sample_factor.max(1) * k).min(n);
    let sample = sample_without_replacement(n, s, seed)?;
    let local = points.subset(&sample)?;
    let z_s = sample_outlier_count(z, s, n);
    let d = points.dim();

    // farthest-point sweep
    let mut chosen: Vec<usize> = vec![0];
    let mut has_duplicates = false;
    let mut gap: Vec<f64> = local.rows().map(|p| sq_dist(p, local.row(0))).collect();
    while chosen.len() < k.min(s) {
        let (far, far_gap) =
            gap.iter().enumerate().fold(
                (0, -1.0),
                |best, (i, &g)| if g > best.1 { (i, g) } else { best },
            );
        let next = if far_gap > 0.0 {
            far
        } else {
            has_duplicates = true;
            (0..s).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, g) in gap.iter_mut().enumerate() {
            *g = g.min(sq_dist(local.row(i), local.row(next)));
        }
    }
    while chosen.len() < k {
        has_duplicates = true;
        chosen.push(chosen[chosen.len() % s]);
    }
    if has_duplicates {
        log::warn!("sample has fewer than {k} distinct points; centers repeat");
    }

    let unit = vec![1.0; s];
    let eval = |rows: &[usize]| -> f64 {
        let flat: Vec<f64> = rows
            .iter()
            .flat_map(|&i| local.row(i).iter().copied())
            .collect();
        let dist: Vec<f64> = local.rows().map(|p| nearest(p, &flat, d).1).collect();
        let removed = trim_heaviest(&dist, &unit, z_s as f64);
        let mut drop = vec![0.0; s];
        for (i, o) in removed {
            drop[i] = o;
        }
        dist.iter()
            .zip(&drop)
            .map(|(&x, &o)| (1.0 - o) * opts.power.apply(x))
            .collect::<CompensatedSum>()
            .value()
    };

    let factor = if k == 1 { 1.0 } else { 1.0 - 1.0 / k as f64 };
    let budget = opts.swap_budget_factor * k;
    let mut cost = eval(&chosen);
    let mut swaps = 0;
    'search: while swaps < budget && cost > 0.0 {
        for j in 0..k {
            for q in 0..s {
                if chosen.contains(&q) {
                    continue;
                }
                let old = chosen[j];
                chosen[j] = q;
                let c = eval(&chosen);
                if c < factor * cost {
                    cost = c;
                    swaps += 1;
                    continue 'search;
                }
                chosen[j] = old;
            }
        }
        break;
    }

    let flat: Vec<f64> = chosen
        .iter()
        .flat_map(|&i| local.row(i).iter().copied())
        .collect();
    Ok(LocalSearchSeed {
        centers: CenterSet::new(d, flat)?,
        center_rows: chosen.iter().map(|&i| sample[i]).collect(),
        sample,
        swaps,
        sample_outliers: z_s,
        has_duplicates,
    })
}
