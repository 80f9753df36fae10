//! TOML run configuration for `laysam run`.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use outlier_coreset::NoiseKind;
use serde::{Deserialize, Serialize};

use crate::pipeline::{parse_power, CoresetSpec, Method, SolveSpec, Task};

fn default_eps() -> f64 {
    0.2
}
fn default_eta() -> f64 {
    0.1
}
fn default_power() -> u8 {
    2
}
fn default_max_iter() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-6
}
fn default_trials() -> usize {
    1
}
fn default_distribution() -> NoiseKind {
    NoiseKind::Gauss
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub method: Method,
    /// Synthetic size; ignored when `input` is set.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    pub z: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Perturbation scale; no injection when absent.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "default_distribution")]
    pub distribution: NoiseKind,
    #[serde(default)]
    pub coreset_size: Option<usize>,
    /// Sample-size constant for theory-sized LaySam.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "default_power")]
    pub power: u8,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Rescale regression features onto `[0, D]` after injection.
    #[serde(default)]
    pub normalize_side: Option<f64>,
    /// Dataset CSV instead of a synthetic instance.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Planted outlier indices of `input` (JSON array), if known.
    #[serde(default)]
    pub truth: Option<PathBuf>,
    /// Overrides `--out-dir`.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))?;
        cfg.validate()
            .with_context(|| format!("{}: invalid config", path.display()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.is_none() {
            let (Some(n), Some(d)) = (self.n, self.d) else {
                bail!("synthetic runs need n and d (or set input)");
            };
            ensure!(
                self.z < n,
                "invariant z < n violated: z = {}, n = {n}",
                self.z
            );
            if self.task == Task::Regress {
                ensure!(d >= 2, "invariant d >= 2 for regression violated: d = {d}");
            }
        } else {
            ensure!(
                self.n.is_none() && self.d.is_none(),
                "n and d come from the input file; drop them"
            );
        }
        if self.task == Task::Cluster {
            ensure!(self.k.is_some_and(|k| k >= 1), "clustering needs k >= 1");
        }
        ensure!(
            self.eps > 0.0 && self.eps <= 1.0,
            "invariant 0 < eps <= 1 violated: eps = {}",
            self.eps
        );
        ensure!(
            self.eta > 0.0 && self.eta < 1.0,
            "invariant 0 < eta < 1 violated: eta = {}",
            self.eta
        );
        if let Some(s) = self.sigma {
            ensure!(
                s >= 0.0 && s.is_finite(),
                "invariant sigma >= 0 violated: sigma = {s}"
            );
        }
        ensure!(self.trials >= 1, "trials must be >= 1");
        if matches!(self.method, Method::Unisam | Method::Nn) {
            ensure!(
                self.coreset_size.is_some(),
                "method {} needs coreset_size",
                self.method.name()
            );
        }
        parse_power(self.power)?;
        if self.normalize_side.is_some() {
            ensure!(
                self.task == Task::Regress,
                "normalize_side applies to regression only"
            );
        }
        Ok(())
    }

    pub fn coreset_spec(&self) -> CoresetSpec {
        CoresetSpec {
            method: self.method,
            eps: self.eps,
            eta: self.eta,
            size: self.coreset_size,
            c: self.c,
        }
    }

    pub fn solve_spec(&self) -> Result<SolveSpec> {
        Ok(SolveSpec {
            power: parse_power(self.power)?,
            max_iter: self.max_iter,
            tol: self.tol,
        })
    }
}
