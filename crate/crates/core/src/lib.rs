//! Layered-sampling coresets for clustering and linear regression with
//! outliers, plus the solvers, baselines and benchmark harness around them.
//!
//! ```
//! use outlier_coreset::{gen_syncluster, layered_coreset_clustering, LayeredOptions, Seed};
//!
//! let g = gen_syncluster(2_000, 2, 3, Seed(1)).unwrap();
//! let core = layered_coreset_clustering(&g.points, &g.centers, 20, &LayeredOptions::default(), Seed(2)).unwrap();
//! assert!((core.total_weight() - 2_000.0).abs() < 1e-6);
//! ```

pub mod baselines;
pub mod clustering;
pub mod coreset;
mod distance;
pub mod error;
pub mod harness;
pub mod layers;
pub mod lsq;
pub mod numeric;
pub mod points;
pub mod regression;
pub mod sampling;
pub mod select;
pub mod trim;

pub use baselines::{nn_coreset, uniform_coreset};
pub use clustering::{
    kmeans_minus_minus, layered_coreset_clustering, local_search_outliers_seed,
    trimmed_cluster_cost, CenterSet, KMeansOptions, KMeansOutcome, LocalSearchOptions,
    LocalSearchSeed,
};
pub use coreset::{BuilderParams, Coreset, Origin};
pub use distance::{min_distances, nearest_centers};
pub use error::{Error, Result};
pub use harness::{
    eval_metrics, gen_syncluster, gen_synregression, inject_outliers, range_probe, Anchor,
    GroundTruth, MetricReport, NoiseKind, ProbeConfig, ProbeReport, SynCluster,
};
pub use layers::{LayerPartition, LayeredOptions, Layering, SampleSize};
pub use points::{PointSet, Seed, WeightedPointSet};
pub use regression::{
    layered_coreset_regression, regression_init, trimmed_regression_cost, trimmed_regression_solve,
    weighted_ols, Hyperplane, RegionBox, RegressionInit, RegressionOptions, RegressionOutcome,
};
pub use trim::{Power, TrimmedCostReport};
