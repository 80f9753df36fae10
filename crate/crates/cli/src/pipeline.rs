//! In-memory pipeline stages shared by the step-by-step subcommands, `run`
//! and `bench`.

use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::ValueEnum;
use outlier_coreset::{
    eval_metrics, kmeans_minus_minus, layered_coreset_clustering, layered_coreset_regression,
    local_search_outliers_seed, nn_coreset, regression_init, trimmed_cluster_cost,
    trimmed_regression_cost, trimmed_regression_solve, uniform_coreset, CenterSet, Coreset,
    Hyperplane, KMeansOptions, LayeredOptions, LocalSearchOptions, MetricReport, PointSet, Power,
    RegressionOptions, SampleSize, Seed, TrimmedCostReport, WeightedPointSet,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Cluster,
    Regress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Laysam,
    Unisam,
    Nn,
    Full,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Laysam => "laysam",
            Method::Unisam => "unisam",
            Method::Nn => "nn",
            Method::Full => "full",
        }
    }
}

pub fn parse_power(p: u8) -> Result<Power> {
    Power::try_from(p).map_err(|e| anyhow::anyhow!("{e}"))
}

/// A clustering or regression solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Centers(CenterSet),
    Plane(Hyperplane),
}

impl Solution {
    pub fn values(&self) -> &[f64] {
        match self {
            Solution::Centers(c) => c.as_flat(),
            Solution::Plane(h) => h.coeffs(),
        }
    }

    pub fn task(&self) -> Task {
        match self {
            Solution::Centers(_) => Task::Cluster,
            Solution::Plane(_) => Task::Regress,
        }
    }

    pub fn from_values(task: Task, d: usize, values: Vec<f64>) -> Result<Self> {
        Ok(match task {
            Task::Cluster => Solution::Centers(CenterSet::new(d, values)?),
            Task::Regress => {
                ensure!(
                    values.len() == d,
                    "a hyperplane in dimension {d} needs {d} coefficients"
                );
                Solution::Plane(Hyperplane::new(values)?)
            }
        })
    }

    pub fn cost(&self, data: &WeightedPointSet, z: f64, power: Power) -> Result<TrimmedCostReport> {
        Ok(match self {
            Solution::Centers(c) => trimmed_cluster_cost(data, c, z, power)?,
            Solution::Plane(h) => trimmed_regression_cost(data, h, z, power)?,
        })
    }
}

pub fn check_layout(task: Task, points: &PointSet) -> Result<()> {
    match task {
        Task::Cluster if points.has_response() => {
            bail!("clustering input must not have a response column `y`")
        }
        Task::Regress if !points.has_response() => {
            bail!("regression input needs a response column `y` as its last column")
        }
        _ => Ok(()),
    }
}

/// Local-search seed (clustering) or sample OLS fit (regression) on `points`.
pub fn anchor(task: Task, points: &PointSet, k: usize, z: usize, seed: Seed) -> Result<Solution> {
    check_layout(task, points)?;
    Ok(match task {
        Task::Cluster => {
            let s = local_search_outliers_seed(points, k, z, &LocalSearchOptions::default(), seed)?;
            if s.has_duplicates {
                log::warn!(
                    "anchor repeats a center; the sample had fewer than {k} distinct points"
                );
            }
            Solution::Centers(s.centers)
        }
        Task::Regress => Solution::Plane(regression_init(points, z, 2, seed)?.plane),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoresetSpec {
    pub method: Method,
    pub eps: f64,
    pub eta: f64,
    /// Total coreset size; required for the baselines.
    pub size: Option<usize>,
    /// Sample-size constant for the theory-sized LaySam build.
    pub c: Option<f64>,
}

/// Builds the coreset; `None` for [`Method::Full`].
pub fn build_coreset(
    points: &PointSet,
    anchor: &Solution,
    z: usize,
    spec: &CoresetSpec,
    seed: Seed,
) -> Result<Option<Coreset>> {
    let core = match spec.method {
        Method::Full => return Ok(None),
        Method::Laysam => {
            let size = match (spec.size, spec.c) {
                (Some(_), Some(_)) => {
                    bail!("give either a coreset size or a sample constant, not both")
                }
                (Some(m), None) => SampleSize::Total(m),
                (None, Some(c)) => SampleSize::Theory { c },
                (None, None) => SampleSize::default(),
            };
            let opts = LayeredOptions {
                eps: spec.eps,
                eta: spec.eta,
                size,
                n_layers: None,
            };
            match anchor {
                Solution::Centers(c) => layered_coreset_clustering(points, c, z, &opts, seed)?,
                Solution::Plane(h) => layered_coreset_regression(points, h, z, &opts, seed)?,
            }
        }
        Method::Unisam | Method::Nn => {
            let m = spec
                .size
                .with_context(|| format!("method {} needs a coreset size", spec.method.name()))?;
            if spec.method == Method::Unisam {
                uniform_coreset(points, m, seed)?
            } else {
                nn_coreset(points, m, seed)?
            }
        }
    };
    Ok(Some(core))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSpec {
    pub power: Power,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub solution: Solution,
    pub report: TrimmedCostReport,
    pub iterations: usize,
    pub stalled: bool,
}

/// k-means-- or trimmed alternating regression from `init`.
pub fn solve(data: &WeightedPointSet, z: f64, init: &Solution, spec: &SolveSpec) -> Result<Solved> {
    Ok(match init {
        Solution::Centers(c) => {
            let opts = KMeansOptions {
                max_iter: spec.max_iter,
                tol: spec.tol,
                power: spec.power,
            };
            let out = kmeans_minus_minus(data, z, c, &opts)?;
            Solved {
                solution: Solution::Centers(out.centers),
                report: out.report,
                iterations: out.iterations,
                stalled: false,
            }
        }
        Solution::Plane(h) => {
            let opts = RegressionOptions {
                max_iter: spec.max_iter,
                tol: spec.tol,
                power: spec.power,
            };
            let out = trimmed_regression_solve(data, z, h, &opts)?;
            Solved {
                solution: Solution::Plane(out.plane),
                report: out.report,
                iterations: out.iterations,
                stalled: out.stalled,
            }
        }
    })
}

/// Scores `solution` on the full instance.
pub fn evaluate(
    points: &PointSet,
    solution: &Solution,
    z: usize,
    truth: &[usize],
    coreset_source: Option<&[usize]>,
    timings: (f64, f64),
) -> Result<MetricReport> {
    let unit = WeightedPointSet::unit(points.clone());
    let l1 = solution.cost(&unit, z as f64, Power::L1)?;
    let l2 = solution.cost(&unit, z as f64, Power::L2)?;
    let all: Vec<usize>;
    let source = match coreset_source {
        Some(s) => s,
        None => {
            all = (0..points.len()).collect();
            &all
        }
    };
    Ok(eval_metrics(
        truth,
        &l2.outliers,
        source,
        (l1.cost, l2.cost),
        timings,
    ))
}

/// Everything one method produces on one instance.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub coreset: Option<Coreset>,
    pub solved: Solved,
    pub metrics: MetricReport,
}

/// Coreset, solve and evaluate with shared anchor `init`.
#[allow(clippy::too_many_arguments)]
pub fn run_method(
    points: &PointSet,
    init: &Solution,
    z: usize,
    truth: &[usize],
    coreset: &CoresetSpec,
    solve_spec: &SolveSpec,
    seed: Seed,
) -> Result<MethodRun> {
    let t = Instant::now();
    let core = build_coreset(points, init, z, coreset, seed)?;
    let construct = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let solved = match &core {
        Some(c) => solve(c.data(), z as f64, init, solve_spec)?,
        None => solve(
            &WeightedPointSet::unit(points.clone()),
            z as f64,
            init,
            solve_spec,
        )?,
    };
    let solve_time = t.elapsed().as_secs_f64();
    let metrics = evaluate(
        points,
        &solved.solution,
        z,
        truth,
        core.as_ref().map(|c| c.source()),
        (construct, solve_time),
    )?;
    Ok(MethodRun {
        coreset: core,
        solved,
        metrics,
    })
}

/// One row of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub sigma: f64,
    pub trial: usize,
    pub l1_loss: f64,
    pub l2_loss: f64,
    pub recall_precision: f64,
    pub pre_recall: f64,
    pub construct_seconds: f64,
    pub solve_seconds: f64,
}

impl MetricsRow {
    pub fn new(method: Method, sigma: f64, trial: usize, m: &MetricReport) -> Self {
        Self {
            method: method.name().to_owned(),
            sigma,
            trial,
            l1_loss: m.l1_loss,
            l2_loss: m.l2_loss,
            recall_precision: m.recall_precision,
            pre_recall: m.pre_recall,
            construct_seconds: m.construct_seconds,
            solve_seconds: m.solve_seconds,
        }
    }

    fn values(&self) -> [f64; 6] {
        [
            self.l1_loss,
            self.l2_loss,
            self.recall_precision,
            self.pre_recall,
            self.construct_seconds,
            self.solve_seconds,
        ]
    }
}

/// Mean and sample standard deviation of every metric per (method, σ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub sigma: f64,
    pub trials: usize,
    pub l1_loss_mean: f64,
    pub l1_loss_sd: f64,
    pub l2_loss_mean: f64,
    pub l2_loss_sd: f64,
    pub recall_precision_mean: f64,
    pub recall_precision_sd: f64,
    pub pre_recall_mean: f64,
    pub pre_recall_sd: f64,
    pub construct_seconds_mean: f64,
    pub construct_seconds_sd: f64,
    pub solve_seconds_mean: f64,
    pub solve_seconds_sd: f64,
}

pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(m, s)| *m == r.method && *s == r.sigma) {
            keys.push((r.method.clone(), r.sigma));
        }
    }
    keys.into_iter()
        .map(|(method, sigma)| {
            let group: Vec<[f64; 6]> = rows
                .iter()
                .filter(|r| r.method == method && r.sigma == sigma)
                .map(MetricsRow::values)
                .collect();
            let stat = |j: usize| mean_sd(&group.iter().map(|v| v[j]).collect::<Vec<_>>());
            let s: Vec<(f64, f64)> = (0..6).map(stat).collect();
            SummaryRow {
                method,
                sigma,
                trials: group.len(),
                l1_loss_mean: s[0].0,
                l1_loss_sd: s[0].1,
                l2_loss_mean: s[1].0,
                l2_loss_sd: s[1].1,
                recall_precision_mean: s[2].0,
                recall_precision_sd: s[2].1,
                pre_recall_mean: s[3].0,
                pre_recall_sd: s[3].1,
                construct_seconds_mean: s[4].0,
                construct_seconds_sd: s[4].1,
                solve_seconds_mean: s[5].0,
                solve_seconds_sd: s[5].1,
            }
        })
        .collect()
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
