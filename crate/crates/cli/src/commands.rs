//! Subcommand implementations. Each stage reads its inputs from the out-dir
//! and records what it wrote in `manifest.json`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use outlier_coreset::regression::normalize_features;
use outlier_coreset::{
    gen_syncluster, gen_synregression, inject_outliers, range_probe, Anchor, NoiseKind, PointSet,
    ProbeConfig, ProbeReport, RegionBox, Seed, WeightedPointSet,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::io::{read_json, read_table, write_coreset, write_json, write_points, write_rows};
use crate::pipeline::{
    anchor, build_coreset, check_layout, evaluate, parse_power, run_method, solve, summarize,
    CoresetSpec, Method, MetricsRow, Solution, SolveSpec, Task,
};
use crate::{
    BenchArgs, Cli, Command, CoresetArgs, EvalArgs, GenArgs, InjectArgs, NormalizeArgs, ProbeArgs,
    RunArgs, SolveArgs,
};

const MANIFEST: &str = "manifest.json";

/// Stage seeds within one trial.
mod stream {
    pub const GEN: u64 = 0;
    pub const INJECT: u64 = 1;
    pub const ANCHOR: u64 = 2;
    pub const CORESET: u64 = 3;
    pub const PROBE: u64 = 4;
}

fn trial_seed(seed: u64, trial: usize) -> Seed {
    Seed(seed).derive(trial as u64)
}

/// Pipeline state shared between subcommands.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub task: Option<Task>,
    pub seed: u64,
    /// Current dataset, relative to the out-dir.
    pub data: String,
    pub k: Option<usize>,
    pub planted: Option<Vec<f64>>,
    pub z: Option<usize>,
    pub sigma: Option<f64>,
    pub distribution: Option<NoiseKind>,
    pub outliers: Option<String>,
    pub normalization: Option<String>,
    pub method: Option<Method>,
    pub eps: Option<f64>,
    pub anchor: Option<String>,
    pub coreset: Option<String>,
    pub construct_seconds: Option<f64>,
    pub solution: Option<String>,
}

impl Manifest {
    fn load(dir: &Path) -> Result<Self> {
        read_json(&dir.join(MANIFEST))
            .context("no pipeline state here; run `gen` first or pass --input")
    }

    fn save(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST), self)
    }

    /// Loads the manifest, or starts one around an external dataset.
    fn load_or_adopt(dir: &Path, input: Option<&Path>) -> Result<Self> {
        let mut m = match (Self::load(dir), input) {
            (Ok(m), _) => m,
            (Err(_), Some(_)) => Manifest::default(),
            (Err(e), None) => return Err(e),
        };
        if let Some(path) = input {
            let abs = std::fs::canonicalize(path)
                .with_context(|| format!("cannot find {}", path.display()))?;
            m.data = abs.to_string_lossy().into_owned();
            let table = read_table(&abs)?;
            m.task = Some(if table.points.has_response() {
                Task::Regress
            } else {
                Task::Cluster
            });
        }
        Ok(m)
    }

    fn task(&self) -> Result<Task> {
        self.task.context("manifest has no task")
    }

    fn points(&self, dir: &Path) -> Result<PointSet> {
        Ok(read_table(&dir.join(&self.data))?.points)
    }

    fn truth(&self, dir: &Path) -> Result<Vec<usize>> {
        match &self.outliers {
            Some(f) => read_json(&dir.join(f)),
            None => Ok(Vec::new()),
        }
    }

    fn drop_downstream(&mut self) {
        self.method = None;
        self.eps = None;
        self.anchor = None;
        self.coreset = None;
        self.construct_seconds = None;
        self.solution = None;
    }
}

/// On-disk solution: flat values plus the trimmed-cost summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub task: Task,
    pub d: usize,
    pub k: Option<usize>,
    pub values: Vec<f64>,
    pub power: u8,
    pub z: f64,
    pub cost: f64,
    pub inlier_weight: f64,
    pub outlier_weight: f64,
    pub iterations: usize,
    pub stalled: bool,
    pub seconds: f64,
}

impl SolutionFile {
    fn solution(&self) -> Result<Solution> {
        Solution::from_values(self.task, self.d, self.values.clone())
    }

    #[allow(clippy::too_many_arguments)]
    fn new(
        sol: &Solution,
        d: usize,
        power: u8,
        z: f64,
        report: &outlier_coreset::TrimmedCostReport,
        iterations: usize,
        stalled: bool,
        seconds: f64,
    ) -> Self {
        Self {
            task: sol.task(),
            d,
            k: match sol {
                Solution::Centers(c) => Some(c.k()),
                Solution::Plane(_) => None,
            },
            values: sol.values().to_vec(),
            power,
            z,
            cost: report.cost,
            inlier_weight: report.inlier_weight,
            outlier_weight: report.outlier_weight(),
            iterations,
            stalled,
            seconds,
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let dir = &cli.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    match &cli.command {
        Command::Gen(a) => gen(dir, cli.seed, a),
        Command::Inject(a) => inject(dir, cli.seed, a),
        Command::Normalize(a) => normalize(dir, a),
        Command::Coreset(a) => coreset(dir, cli.seed, a),
        Command::Solve(a) => solve_cmd(dir, a),
        Command::Eval(a) => eval(dir, a),
        Command::Probe(a) => probe(dir, cli.seed, a),
        Command::Bench(a) => bench(dir, cli.seed, a),
        Command::Run(a) => run(dir, a),
    }
}

fn generate(
    task: Task,
    n: usize,
    d: usize,
    k: Option<usize>,
    seed: Seed,
) -> Result<(PointSet, Vec<f64>)> {
    Ok(match task {
        Task::Cluster => {
            let k = k.context("clustering needs --k")?;
            let g = gen_syncluster(n, d, k, seed)?;
            (g.points, g.centers.as_flat().to_vec())
        }
        Task::Regress => {
            let (p, h) = gen_synregression(n, d, seed)?;
            (p, h.coeffs().to_vec())
        }
    })
}

fn gen(dir: &Path, seed: u64, a: &GenArgs) -> Result<()> {
    let (points, planted) = generate(
        a.task,
        a.n,
        a.d,
        a.k,
        trial_seed(seed, 0).derive(stream::GEN),
    )?;
    write_points(&dir.join("data.csv"), &points)?;
    let m = Manifest {
        task: Some(a.task),
        seed,
        data: "data.csv".into(),
        k: a.k,
        planted: Some(planted),
        ..Default::default()
    };
    m.save(dir)?;
    println!(
        "wrote {} points to {}",
        points.len(),
        dir.join("data.csv").display()
    );
    Ok(())
}

fn inject(dir: &Path, seed: u64, a: &InjectArgs) -> Result<()> {
    let mut m = Manifest::load_or_adopt(dir, a.input.as_deref())?;
    let points = m.points(dir)?;
    let (noisy, truth) = inject_outliers(
        &points,
        a.z,
        a.dist,
        a.sigma,
        trial_seed(seed, 0).derive(stream::INJECT),
    )?;
    write_points(&dir.join("data_noisy.csv"), &noisy)?;
    write_json(&dir.join("outliers.json"), &truth.outliers)?;
    m.data = "data_noisy.csv".into();
    m.outliers = Some("outliers.json".into());
    m.z = Some(a.z);
    m.sigma = Some(a.sigma);
    m.distribution = Some(a.dist);
    m.drop_downstream();
    m.save(dir)?;
    println!("perturbed {} of {} points", a.z, noisy.len());
    Ok(())
}

fn normalize(dir: &Path, a: &NormalizeArgs) -> Result<()> {
    let mut m = Manifest::load_or_adopt(dir, a.input.as_deref())?;
    let points = m.points(dir)?;
    let (scaled, maps) = normalize_features(&points, RegionBox::new(a.side)?)?;
    write_points(&dir.join("data_normalized.csv"), &scaled)?;
    write_json(&dir.join("normalization.json"), &maps)?;
    m.data = "data_normalized.csv".into();
    m.normalization = Some("normalization.json".into());
    m.drop_downstream();
    m.save(dir)?;
    println!("scaled {} feature columns onto [0, {}]", maps.len(), a.side);
    Ok(())
}

fn coreset(dir: &Path, seed: u64, a: &CoresetArgs) -> Result<()> {
    let mut m = Manifest::load_or_adopt(dir, a.input.as_deref())?;
    let task = m.task()?;
    let points = m.points(dir)?;
    check_layout(task, &points)?;
    let z = a.z.or(m.z).context("outlier count unknown; pass --z")?;
    let k = a.k.or(m.k).unwrap_or(1);
    if task == Task::Cluster && a.k.or(m.k).is_none() {
        bail!("clustering needs --k");
    }
    let s = trial_seed(seed, 0);
    let init = anchor(task, &points, k, z, s.derive(stream::ANCHOR))?;
    let unit = WeightedPointSet::unit(points.clone());
    let report = init.cost(&unit, z as f64, outlier_coreset::Power::L1)?;
    write_json(
        &dir.join("anchor.json"),
        &SolutionFile::new(&init, points.dim(), 1, z as f64, &report, 0, false, 0.0),
    )?;
    let spec = CoresetSpec {
        method: a.method,
        eps: a.eps,
        eta: a.eta,
        size: a.size,
        c: a.c,
    };
    let t = Instant::now();
    let core = build_coreset(&points, &init, z, &spec, s.derive(stream::CORESET))?;
    let secs = t.elapsed().as_secs_f64();
    m.drop_downstream();
    m.k = Some(k);
    m.z = Some(z);
    m.method = Some(a.method);
    m.eps = Some(a.eps);
    m.anchor = Some("anchor.json".into());
    m.construct_seconds = Some(secs);
    match core {
        Some(core) => {
            write_coreset(&dir.join("coreset.csv"), &core)?;
            m.coreset = Some("coreset.csv".into());
            println!(
                "{} coreset: {} points ({} outer), total weight {}, {:.3}s",
                a.method.name(),
                core.len(),
                core.outer_count(),
                core.total_weight(),
                secs
            );
        }
        None => println!(
            "method full: the solver will run on all {} points",
            points.len()
        ),
    }
    m.save(dir)
}

/// Weighted input of the solver: the coreset, or the whole dataset.
fn solver_input(dir: &Path, m: &Manifest) -> Result<WeightedPointSet> {
    match (&m.method, &m.coreset) {
        (Some(Method::Full), _) | (None, _) => Ok(WeightedPointSet::unit(m.points(dir)?)),
        (Some(_), Some(f)) => {
            let t = read_table(&dir.join(f))?;
            let w = t.weights.context("coreset file lacks the w column")?;
            Ok(WeightedPointSet::new(t.points, w)?)
        }
        (Some(method), None) => bail!(
            "no coreset for method {}; run `coreset` first",
            method.name()
        ),
    }
}

fn solve_cmd(dir: &Path, a: &SolveArgs) -> Result<()> {
    let mut m = Manifest::load(dir)?;
    let task = m.task()?;
    let z = a.z.or(m.z).context("outlier count unknown; pass --z")?;
    let data = solver_input(dir, &m)?;
    let init = match &m.anchor {
        Some(f) => read_json::<SolutionFile>(&dir.join(f))?.solution()?,
        None => {
            let k = a.k.or(m.k).unwrap_or(1);
            anchor(
                task,
                data.points(),
                k,
                z,
                trial_seed(m.seed, 0).derive(stream::ANCHOR),
            )?
        }
    };
    if let (Some(k), Solution::Centers(c)) = (a.k, &init) {
        if c.k() != k {
            bail!(
                "anchor has {} centers but --k is {k}; rerun `coreset --k {k}`",
                c.k()
            );
        }
    }
    let spec = SolveSpec {
        power: parse_power(a.power)?,
        max_iter: a.max_iter,
        tol: a.tol,
    };
    let t = Instant::now();
    let out = solve(&data, z as f64, &init, &spec)?;
    let secs = t.elapsed().as_secs_f64();
    let file = SolutionFile::new(
        &out.solution,
        data.dim(),
        a.power,
        z as f64,
        &out.report,
        out.iterations,
        out.stalled,
        secs,
    );
    write_json(&dir.join("solution.json"), &file)?;
    m.solution = Some("solution.json".into());
    m.save(dir)?;
    println!(
        "solved on {} points: cost {} after {} iterations, {:.3}s",
        data.len(),
        out.report.cost,
        out.iterations,
        secs
    );
    Ok(())
}

fn eval(dir: &Path, a: &EvalArgs) -> Result<()> {
    let m = Manifest::load(dir)?;
    let file: SolutionFile = read_json(
        &dir.join(
            m.solution
                .as_deref()
                .context("no solution; run `solve` first")?,
        ),
    )?;
    let points = m.points(dir)?;
    let z = file.z as usize;
    let source = match (&m.method, &m.coreset) {
        (Some(Method::Full), _) | (None, _) => None,
        (Some(_), Some(f)) => Some(
            read_table(&dir.join(f))?
                .source
                .context("coreset file lacks the src column")?,
        ),
        (Some(_), None) => bail!("coreset file missing"),
    };
    let truth = m.truth(dir)?;
    let metrics = evaluate(
        &points,
        &file.solution()?,
        z,
        &truth,
        source.as_deref(),
        (m.construct_seconds.unwrap_or(0.0), file.seconds),
    )?;
    if metrics.empty_truth {
        log::warn!("no planted outliers recorded; recall and pre-recall are set to 1");
    }
    let row = MetricsRow::new(
        m.method.unwrap_or(Method::Full),
        m.sigma.unwrap_or(0.0),
        a.trial,
        &metrics,
    );
    write_rows(&dir.join("metrics.csv"), std::slice::from_ref(&row))?;
    println!("{}", serde_json::to_string(&row)?);
    Ok(())
}

#[derive(Debug, Serialize)]
struct ProbeFile {
    range: f64,
    eps: f64,
    power: u8,
    #[serde(flatten)]
    report: ProbeReport,
}

fn probe(dir: &Path, seed: u64, a: &ProbeArgs) -> Result<()> {
    let m = Manifest::load(dir)?;
    let points = m.points(dir)?;
    let anchor_file: SolutionFile = read_json(
        &dir.join(
            m.anchor
                .as_deref()
                .context("no anchor; run `coreset` first")?,
        ),
    )?;
    let coreset_file = m
        .coreset
        .as_deref()
        .context("no coreset to probe; run `coreset` with a sampling method")?;
    let table = read_table(&dir.join(coreset_file))?;
    let core = outlier_coreset::Coreset::from_parts(
        WeightedPointSet::new(table.points, table.weights.context("coreset lacks w")?)?,
        table.origin.context("coreset lacks origin")?,
        table.source.context("coreset lacks src")?,
    )?;
    let z = anchor_file.z;
    let anchor = match anchor_file.solution()? {
        Solution::Centers(c) => Anchor::Centers(c),
        Solution::Plane(h) => Anchor::Plane {
            plane: h,
            region: RegionBox::new(a.side)?,
        },
    };
    let power = parse_power(a.power)?;
    let range = match a.range {
        Some(l) => l,
        None => {
            let unit = WeightedPointSet::unit(points.clone());
            a.range_factor
                * anchor_file
                    .solution()?
                    .cost(&unit, z, outlier_coreset::Power::L1)?
                    .cost
        }
    };
    let eps = m.eps.unwrap_or(0.2);
    let cfg = ProbeConfig {
        range,
        z,
        power,
        trials: a.trials,
        eps: Some(eps),
    };
    let report = range_probe(
        &points,
        &core,
        &anchor,
        &cfg,
        trial_seed(seed, 0).derive(stream::PROBE),
    )?;
    println!(
        "max |coreset - full| = {} vs bound {} ({} of {} solutions over the bound)",
        report.max_abs_error, report.bound, report.violations, report.trials
    );
    write_json(
        &dir.join("probe.json"),
        &ProbeFile {
            range,
            eps,
            power: a.power,
            report,
        },
    )
}

fn bench(dir: &Path, seed: u64, a: &BenchArgs) -> Result<()> {
    let solve_spec = SolveSpec {
        power: parse_power(a.power)?,
        max_iter: a.max_iter,
        tol: a.tol,
    };
    let jobs: Vec<(usize, f64)> = a
        .sigmas
        .iter()
        .flat_map(|&sigma| (0..a.trials).map(move |t| (t, sigma)))
        .collect();
    let results: Vec<Result<Vec<MetricsRow>>> = jobs
        .par_iter()
        .map(|&(trial, sigma)| {
            let s = trial_seed(seed, trial);
            // the clean instance is shared across sigma values of one trial
            let (clean, _) = generate(a.task, a.n, a.d, Some(a.k), s.derive(stream::GEN))?;
            let (points, truth) =
                inject_outliers(&clean, a.z, a.dist, sigma, s.derive(stream::INJECT))?;
            let init = anchor(a.task, &points, a.k, a.z, s.derive(stream::ANCHOR))?;
            a.methods
                .iter()
                .map(|&method| {
                    let spec = CoresetSpec {
                        method,
                        eps: a.eps,
                        eta: a.eta,
                        size: (method != Method::Full).then_some(a.size),
                        c: None,
                    };
                    let run = run_method(
                        &points,
                        &init,
                        a.z,
                        &truth.outliers,
                        &spec,
                        &solve_spec,
                        s.derive(stream::CORESET),
                    )
                    .with_context(|| {
                        format!("{} at sigma {sigma}, trial {trial}", method.name())
                    })?;
                    Ok(MetricsRow::new(method, sigma, trial, &run.metrics))
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|x, y| x.sigma.total_cmp(&y.sigma).then(x.trial.cmp(&y.trial)));
    write_rows(&dir.join("bench.csv"), &rows)?;
    let summary = summarize(&rows);
    write_rows(&dir.join("bench_summary.csv"), &summary)?;
    print_summary(&summary);
    Ok(())
}

fn print_summary(summary: &[crate::pipeline::SummaryRow]) {
    println!(
        "{:<8} {:>10} {:>6} {:>14} {:>12} {:>12} {:>12}",
        "method", "sigma", "trials", "l2_loss", "l2_sd", "recall", "pre_recall"
    );
    for s in summary {
        println!(
            "{:<8} {:>10} {:>6} {:>14.6} {:>12.6} {:>12.4} {:>12.4}",
            s.method,
            s.sigma,
            s.trials,
            s.l2_loss_mean,
            s.l2_loss_sd,
            s.recall_precision_mean,
            s.pre_recall_mean
        );
    }
}

fn run(dir: &Path, a: &RunArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(t) = a.trials {
        cfg.trials = t;
        cfg.validate()?;
    }
    let out: PathBuf = cfg.out_dir.clone().unwrap_or_else(|| dir.to_path_buf());
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("run.toml"), cfg.to_toml()?)?;
    let rows: Vec<Result<MetricsRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let trial_dir = if cfg.trials == 1 {
                out.clone()
            } else {
                out.join(format!("trial-{trial}"))
            };
            run_trial(&cfg, trial, &trial_dir).with_context(|| format!("trial {trial}"))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    write_rows(&out.join("metrics.csv"), &rows)?;
    let summary = summarize(&rows);
    write_rows(&out.join("metrics_summary.csv"), &summary)?;
    print_summary(&summary);
    Ok(())
}

/// One trial of a configured run, writing its artifacts like the
/// step-by-step subcommands do.
fn run_trial(cfg: &RunConfig, trial: usize, dir: &Path) -> Result<MetricsRow> {
    std::fs::create_dir_all(dir)?;
    let s = trial_seed(cfg.seed, trial);
    let mut m = Manifest {
        task: Some(cfg.task),
        seed: cfg.seed,
        k: cfg.k,
        ..Default::default()
    };
    let (mut points, mut truth) = match &cfg.input {
        Some(path) => {
            let points = read_table(path)?.points;
            let truth: Vec<usize> = match &cfg.truth {
                Some(t) => read_json(t)?,
                None => Vec::new(),
            };
            m.data = std::fs::canonicalize(path)?.to_string_lossy().into_owned();
            (points, truth)
        }
        None => {
            let (n, d) = (cfg.n.expect("validated"), cfg.d.expect("validated"));
            let (p, planted) = generate(cfg.task, n, d, cfg.k, s.derive(stream::GEN))?;
            write_points(&dir.join("data.csv"), &p)?;
            m.data = "data.csv".into();
            m.planted = Some(planted);
            (p, Vec::new())
        }
    };
    check_layout(cfg.task, &points)?;
    if cfg.z >= points.len() {
        bail!(
            "invariant z < n violated: z = {}, n = {}",
            cfg.z,
            points.len()
        );
    }
    if let Some(sigma) = cfg.sigma {
        let (noisy, gt) = inject_outliers(
            &points,
            cfg.z,
            cfg.distribution,
            sigma,
            s.derive(stream::INJECT),
        )?;
        write_points(&dir.join("data_noisy.csv"), &noisy)?;
        write_json(&dir.join("outliers.json"), &gt.outliers)?;
        m.data = "data_noisy.csv".into();
        m.outliers = Some("outliers.json".into());
        m.sigma = Some(sigma);
        m.distribution = Some(cfg.distribution);
        points = noisy;
        truth = gt.outliers;
    } else if !truth.is_empty() {
        write_json(&dir.join("outliers.json"), &truth)?;
        m.outliers = Some("outliers.json".into());
    }
    if let Some(side) = cfg.normalize_side {
        let (scaled, maps) = normalize_features(&points, RegionBox::new(side)?)?;
        write_points(&dir.join("data_normalized.csv"), &scaled)?;
        write_json(&dir.join("normalization.json"), &maps)?;
        m.data = "data_normalized.csv".into();
        m.normalization = Some("normalization.json".into());
        points = scaled;
    }
    let k = cfg.k.unwrap_or(1);
    let init = anchor(cfg.task, &points, k, cfg.z, s.derive(stream::ANCHOR))?;
    let unit = WeightedPointSet::unit(points.clone());
    let anchor_report = init.cost(&unit, cfg.z as f64, outlier_coreset::Power::L1)?;
    write_json(
        &dir.join("anchor.json"),
        &SolutionFile::new(
            &init,
            points.dim(),
            1,
            cfg.z as f64,
            &anchor_report,
            0,
            false,
            0.0,
        ),
    )?;
    let run = run_method(
        &points,
        &init,
        cfg.z,
        &truth,
        &cfg.coreset_spec(),
        &cfg.solve_spec()?,
        s.derive(stream::CORESET),
    )?;
    if let Some(core) = &run.coreset {
        write_coreset(&dir.join("coreset.csv"), core)?;
        m.coreset = Some("coreset.csv".into());
    }
    write_json(
        &dir.join("solution.json"),
        &SolutionFile::new(
            &run.solved.solution,
            points.dim(),
            cfg.power,
            cfg.z as f64,
            &run.solved.report,
            run.solved.iterations,
            run.solved.stalled,
            run.metrics.solve_seconds,
        ),
    )?;
    m.z = Some(cfg.z);
    m.method = Some(cfg.method);
    m.eps = Some(cfg.eps);
    m.anchor = Some("anchor.json".into());
    m.construct_seconds = Some(run.metrics.construct_seconds);
    m.solution = Some("solution.json".into());
    m.save(dir)?;
    let row = MetricsRow::new(cfg.method, cfg.sigma.unwrap_or(0.0), trial, &run.metrics);
    write_rows(&dir.join("metrics.csv"), std::slice::from_ref(&row))?;
    Ok(row)
}
