//! Plain-Rust state behind the browser page: one planar instance, its
//! anchor, the current coreset and the solutions compared on it.

use outlier_coreset::clustering::build_layers_clustering;
use outlier_coreset::regression::build_layers_regression;
use outlier_coreset::{
    gen_syncluster, gen_synregression, inject_outliers, kmeans_minus_minus,
    layered_coreset_clustering, layered_coreset_regression, local_search_outliers_seed,
    range_probe, regression_init, trimmed_cluster_cost, trimmed_regression_cost,
    trimmed_regression_solve, uniform_coreset, Anchor, Coreset, Error, KMeansOptions,
    LayeredOptions, Layering, LocalSearchOptions, NoiseKind, Origin, PointSet, Power, ProbeConfig,
    ProbeReport, RegionBox, RegressionOptions, Result, SampleSize, Seed, WeightedPointSet,
};

const REGION_SIDE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Laysam,
    Unisam,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laysam" => Ok(Method::Laysam),
            "unisam" => Ok(Method::Unisam),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildSummary {
    pub size: usize,
    pub outer: usize,
    pub total_weight: f64,
    /// Outliers of the instance that made it into the coreset.
    pub outliers_kept: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    /// Trimmed L2 cost on the full data of the solution found on the coreset.
    pub coreset_solution_cost: f64,
    /// Same, for the solution found on the full data.
    pub full_solution_cost: f64,
    /// Planted outliers among the `z` points the coreset solution trims.
    pub recall: f64,
}

pub struct Scene {
    points: PointSet,
    outliers: Vec<usize>,
    k: usize,
    z: usize,
    anchor: Anchor,
    coreset: Option<Coreset>,
    eps: f64,
    radii: Vec<f64>,
    solution: Option<Anchor>,
    seed: Seed,
}

impl Scene {
    /// `n` planar points around `k` centers, `z` of them pushed away by
    /// Gaussian noise of scale `sigma`.
    pub fn cluster(n: usize, k: usize, z: usize, sigma: f64, seed: u64) -> Result<Self> {
        let seed = Seed(seed);
        let clean = gen_syncluster(n, 2, k, seed.derive(0))?.points;
        let (points, truth) = inject_outliers(&clean, z, NoiseKind::Gauss, sigma, seed.derive(1))?;
        let anchor = local_search_outliers_seed(
            &points,
            k,
            z,
            &LocalSearchOptions::default(),
            seed.derive(2),
        )?;
        Ok(Self::assemble(
            points,
            truth.outliers,
            k,
            z,
            Anchor::Centers(anchor.centers),
            seed,
        ))
    }

    /// `n` points near a line over `x ∈ [0, 10]`, `z` of them perturbed.
    pub fn regression(n: usize, z: usize, sigma: f64, seed: u64) -> Result<Self> {
        let seed = Seed(seed);
        let (clean, _) = gen_synregression(n, 2, seed.derive(0))?;
        let (points, truth) = inject_outliers(&clean, z, NoiseKind::Gauss, sigma, seed.derive(1))?;
        let plane = regression_init(&points, z, 2, seed.derive(2))?.plane;
        let anchor = Anchor::Plane {
            plane,
            region: RegionBox::new(REGION_SIDE)?,
        };
        Ok(Self::assemble(points, truth.outliers, 1, z, anchor, seed))
    }

    fn assemble(
        points: PointSet,
        outliers: Vec<usize>,
        k: usize,
        z: usize,
        anchor: Anchor,
        seed: Seed,
    ) -> Self {
        Self {
            points,
            outliers,
            k,
            z,
            anchor,
            coreset: None,
            eps: 1.0,
            radii: Vec::new(),
            solution: None,
            seed,
        }
    }

    pub fn is_regression(&self) -> bool {
        matches!(self.anchor, Anchor::Plane { .. })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn outliers(&self) -> &[usize] {
        &self.outliers
    }

    pub fn coreset(&self) -> Option<&Coreset> {
        self.coreset.as_ref()
    }

    /// Centers or `[slope, intercept]` of the anchor.
    pub fn anchor_values(&self) -> Vec<f64> {
        anchor_values(&self.anchor)
    }

    pub fn solution_values(&self) -> Option<Vec<f64>> {
        self.solution.as_ref().map(anchor_values)
    }

    /// Outer radii `r, 2r, …, 2^N r` of the inner layers of the current
    /// LaySam coreset; empty for other coresets.
    pub fn layer_radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn build(
        &mut self,
        method: Method,
        size: usize,
        eps: f64,
        seed: u64,
    ) -> Result<BuildSummary> {
        let seed = self.seed.derive(3).derive(seed);
        self.radii.clear();
        if method == Method::Laysam {
            let layering = match &self.anchor {
                Anchor::Centers(c) => build_layers_clustering(&self.points, c, self.z, eps, None)?,
                Anchor::Plane { plane, .. } => {
                    build_layers_regression(&self.points, plane, self.z, eps, None)?
                }
            };
            if let Layering::Partition(p) = layering {
                self.radii = (0..=p.n_layers)
                    .map(|i| p.base_radius * 2f64.powi(i as i32))
                    .collect();
            }
        }
        let core = match method {
            Method::Unisam => uniform_coreset(&self.points, size, seed)?,
            Method::Laysam => {
                let opts = LayeredOptions {
                    eps,
                    size: SampleSize::Total(size),
                    ..LayeredOptions::default()
                };
                match &self.anchor {
                    Anchor::Centers(c) => {
                        layered_coreset_clustering(&self.points, c, self.z, &opts, seed)?
                    }
                    Anchor::Plane { plane, .. } => {
                        layered_coreset_regression(&self.points, plane, self.z, &opts, seed)?
                    }
                }
            }
        };
        let mut planted = vec![false; self.points.len()];
        for &i in &self.outliers {
            planted[i] = true;
        }
        let summary = BuildSummary {
            size: core.len(),
            outer: core.outer_count(),
            total_weight: core.total_weight(),
            outliers_kept: core.source().iter().filter(|&&i| planted[i]).count(),
        };
        self.eps = eps;
        self.coreset = Some(core);
        self.solution = None;
        Ok(summary)
    }

    fn solve_on(&self, data: &WeightedPointSet) -> Result<Anchor> {
        Ok(match &self.anchor {
            Anchor::Centers(c) => Anchor::Centers(
                kmeans_minus_minus(data, self.z as f64, c, &KMeansOptions::default())?.centers,
            ),
            Anchor::Plane { plane, region } => Anchor::Plane {
                plane: trimmed_regression_solve(
                    data,
                    self.z as f64,
                    plane,
                    &RegressionOptions::default(),
                )?
                .plane,
                region: *region,
            },
        })
    }

    fn full_cost(&self, sol: &Anchor) -> Result<outlier_coreset::TrimmedCostReport> {
        let unit = WeightedPointSet::unit(self.points.clone());
        match sol {
            Anchor::Centers(c) => trimmed_cluster_cost(&unit, c, self.z as f64, Power::L2),
            Anchor::Plane { plane, .. } => {
                trimmed_regression_cost(&unit, plane, self.z as f64, Power::L2)
            }
        }
    }

    /// Solves on the coreset and on the full data from the same anchor and
    /// scores both on the full data.
    pub fn solve(&mut self) -> Result<SolveSummary> {
        let core = self
            .coreset
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("build a coreset first".into()))?;
        let on_core = self.solve_on(core.data())?;
        let on_full = self.solve_on(&WeightedPointSet::unit(self.points.clone()))?;
        let core_report = self.full_cost(&on_core)?;
        let trimmed: Vec<usize> = (0..self.points.len())
            .filter(|&i| core_report.outlier_mass(i) > 0.0)
            .collect();
        let hits = self
            .outliers
            .iter()
            .filter(|i| trimmed.binary_search(i).is_ok())
            .count();
        let summary = SolveSummary {
            coreset_solution_cost: core_report.cost,
            full_solution_cost: self.full_cost(&on_full)?.cost,
            recall: if self.outliers.is_empty() {
                1.0
            } else {
                hits as f64 / self.outliers.len() as f64
            },
        };
        self.solution = Some(on_core);
        Ok(summary)
    }

    /// Largest gap between coreset and full trimmed costs over random
    /// solutions whose distance to the anchor is at most
    /// `range_factor · cost(P, anchor)`.
    pub fn probe(&self, range_factor: f64, trials: usize, seed: u64) -> Result<ProbeReport> {
        let core = self
            .coreset
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("build a coreset first".into()))?;
        let unit = WeightedPointSet::unit(self.points.clone());
        let anchor_cost = match &self.anchor {
            Anchor::Centers(c) => trimmed_cluster_cost(&unit, c, self.z as f64, Power::L1)?,
            Anchor::Plane { plane, .. } => {
                trimmed_regression_cost(&unit, plane, self.z as f64, Power::L1)?
            }
        }
        .cost;
        let cfg = ProbeConfig {
            range: range_factor * anchor_cost,
            z: self.z as f64,
            power: Power::L1,
            trials,
            eps: Some(self.eps),
        };
        range_probe(
            &self.points,
            core,
            &self.anchor,
            &cfg,
            self.seed.derive(4).derive(seed),
        )
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn z(&self) -> usize {
        self.z
    }
}

fn anchor_values(a: &Anchor) -> Vec<f64> {
    match a {
        Anchor::Centers(c) => c.as_flat().to_vec(),
        Anchor::Plane { plane, .. } => plane.coeffs().to_vec(),
    }
}

/// Compact per-point tag for drawing: the layer index, or one of the
/// constants below.
pub fn origin_code(o: Origin) -> u32 {
    match o {
        Origin::Layer(i) => i,
        Origin::Outer => OUTER,
        Origin::Uniform | Origin::NnRepresentative => UNIFORM,
    }
}

pub const OUTER: u32 = 1000;
pub const UNIFORM: u32 = 1001;
