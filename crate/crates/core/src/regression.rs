//! Linear regression with outliers: residuals, feature normalization,
//! trimmed objectives, the slab-layered coreset, weighted least squares and
//! the alternating trimmed solver.

use serde::{Deserialize, Serialize};

use crate::coreset::Coreset;
use crate::error::{Error, Result};
use crate::layers::{
    build_layers, layered_coreset, LayeredOptions, LayeredRequest, Layering, ProblemShape,
};
use crate::lsq::least_squares;
use crate::points::{PointSet, Seed, WeightedPointSet};
use crate::sampling::sample_without_replacement;
use crate::trim::{check_outlier_mass, trimmed_report, Power, TrimmedCostReport};

/// Coefficients `h = (h_1, …, h_d)` of `y = Σ_{j<d} h_j x_j + h_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    coeffs: Vec<f64>,
}

impl Hyperplane {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidArgument(
                "a hyperplane needs at least one slope and an intercept".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "hyperplane coefficients must be finite".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// The all-zero model in dimension `d`.
    pub fn zeros(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn slopes(&self) -> &[f64] {
        &self.coeffs[..self.coeffs.len() - 1]
    }

    pub fn intercept(&self) -> f64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    #[inline]
    fn residual_unchecked(&self, p: &[f64]) -> f64 {
        let d = self.coeffs.len();
        let fitted: f64 = p[..d - 1]
            .iter()
            .zip(&self.coeffs)
            .map(|(x, h)| x * h)
            .sum();
        p[d - 1] - fitted - self.coeffs[d - 1]
    }
}

/// Feature box `[0, D]^{d-1}` (response unconstrained).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBox {
    pub side: f64,
}

impl RegionBox {
    pub fn new(side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "region side must be positive, got {side}"
            )));
        }
        Ok(Self { side })
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point[..point.len() - 1]
            .iter()
            .all(|&x| (0.0..=self.side).contains(&x))
    }
}

impl Default for RegionBox {
    fn default() -> Self {
        Self { side: 10.0 }
    }
}

/// Signed residual `y − Σ h_j x_j − h_d` of a point `(x_1, …, x_{d-1}, y)`.
pub fn residual(point: &[f64], plane: &Hyperplane) -> Result<f64> {
    if point.len() != plane.dim() {
        return Err(Error::DimensionMismatch {
            expected: plane.dim(),
            found: point.len(),
        });
    }
    Ok(plane.residual_unchecked(point))
}

fn check_layout(points: &PointSet, plane: &Hyperplane) -> Result<()> {
    if !points.has_response() {
        return Err(Error::MissingResponse);
    }
    if points.dim() != plane.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            found: plane.dim(),
        });
    }
    Ok(())
}

/// `|Res(p, h)|` for every point.
pub fn abs_residuals(points: &PointSet, plane: &Hyperplane) -> Result<Vec<f64>> {
    check_layout(points, plane)?;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(points
            .coords()
            .par_chunks_exact(points.dim())
            .with_min_len(1024)
            .map(|p| plane.residual_unchecked(p).abs())
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    Ok(points
        .rows()
        .map(|p| plane.residual_unchecked(p).abs())
        .collect())
}

/// Per-column map `x' = scale · x + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.offset
    }
}

/// Min-max maps every feature column onto `[0, D]`; the response is left
/// alone. Constant columns map to `D/2`.
pub fn normalize_features(
    points: &PointSet,
    region: RegionBox,
) -> Result<(PointSet, Vec<AffineMap>)> {
    if !points.has_response() {
        return Err(Error::MissingResponse);
    }
    let (d, f) = (points.dim(), points.feature_dim());
    let mut maps = Vec::with_capacity(f);
    for j in 0..f {
        let (lo, hi) = points
            .rows()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[j]), hi.max(r[j]))
            });
        let map = if hi > lo {
            let scale = region.side / (hi - lo);
            AffineMap {
                scale,
                offset: -lo * scale,
            }
        } else {
            log::warn!("feature column {j} is constant; mapping it to D/2");
            AffineMap {
                scale: 0.0,
                offset: region.side / 2.0,
            }
        };
        maps.push(map);
    }
    let mut out = points.clone();
    for row in out.coords_mut().chunks_exact_mut(d) {
        for (x, m) in row.iter_mut().zip(&maps) {
            let v = m.apply(*x);
            // pin the endpoints against rounding
            *x = v.clamp(0.0, region.side);
        }
    }
    Ok((out, maps))
}

/// Expresses a hyperplane fitted on normalized features in raw coordinates.
pub fn denormalize_plane(plane: &Hyperplane, maps: &[AffineMap]) -> Result<Hyperplane> {
    if maps.len() + 1 != plane.dim() {
        return Err(Error::DimensionMismatch {
            expected: maps.len() + 1,
            found: plane.dim(),
        });
    }
    let mut coeffs: Vec<f64> = plane
        .slopes()
        .iter()
        .zip(maps)
        .map(|(h, m)| h * m.scale)
        .collect();
    let shift: f64 = plane
        .slopes()
        .iter()
        .zip(maps)
        .map(|(h, m)| h * m.offset)
        .sum();
    coeffs.push(plane.intercept() + shift);
    Hyperplane::new(coeffs)
}

/// Trimmed regression cost `LR_power^{-z}(W, h)`.
pub fn trimmed_regression_cost(
    data: &WeightedPointSet,
    plane: &Hyperplane,
    z: f64,
    power: Power,
) -> Result<TrimmedCostReport> {
    let res = abs_residuals(data.points(), plane)?;
    trimmed_report(
        res,
        data.weights(),
        data.total_weight(),
        z,
        power,
        Vec::new(),
    )
}

/// Slab partition around the anchor hyperplane.
pub fn build_layers_regression(
    points: &PointSet,
    anchor: &Hyperplane,
    z: usize,
    eps: f64,
    n_layers: Option<usize>,
) -> Result<Layering> {
    let res = abs_residuals(points, anchor)?;
    build_layers(&res, z, eps, n_layers)
}

/// Layered-sampling coreset for regression with `z` outliers.
pub fn layered_coreset_regression(
    points: &PointSet,
    anchor: &Hyperplane,
    z: usize,
    opts: &LayeredOptions,
    seed: Seed,
) -> Result<Coreset> {
    let res = abs_residuals(points, anchor)?;
    layered_coreset(LayeredRequest {
        points,
        distances: &res,
        z,
        opts,
        shape: ProblemShape {
            k: 1,
            d: points.dim(),
        },
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub plane: Hyperplane,
    pub rank: usize,
    /// The weighted design lacked full column rank; `plane` is the
    /// minimum-norm minimizer.
    pub degenerate: bool,
}

/// Weighted least squares `argmin_h Σ w_i Res(p_i, h)²`.
///
/// `masses` replaces the point weights when given (used to restrict the fit
/// to inlier mass).
pub fn weighted_ols(data: &WeightedPointSet, masses: Option<&[f64]>) -> Result<OlsFit> {
    let points = data.points();
    if !points.has_response() {
        return Err(Error::MissingResponse);
    }
    let w = masses.unwrap_or(data.weights());
    if w.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: w.len(),
        });
    }
    let f = points.feature_dim();
    let rows: Vec<usize> = (0..points.len()).filter(|&i| w[i] > 0.0).collect();
    let roots: Vec<f64> = rows.iter().map(|&i| w[i].sqrt()).collect();
    let mut cols: Vec<Vec<f64>> = (0..f)
        .map(|j| {
            rows.iter()
                .zip(&roots)
                .map(|(&i, s)| s * points.row(i)[j])
                .collect()
        })
        .collect();
    cols.push(roots.clone());
    let b: Vec<f64> = rows
        .iter()
        .zip(&roots)
        .map(|(&i, s)| s * points.response(i))
        .collect();
    let ls = least_squares(cols, &b);
    let degenerate = !ls.is_full_rank();
    if degenerate {
        log::debug!("weighted design has rank {} < {}", ls.rank, f + 1);
    }
    Ok(OlsFit {
        plane: Hyperplane::new(ls.solution)?,
        rank: ls.rank,
        degenerate,
    })
}

/// Inner reweighting rounds of the absolute-deviation fit.
pub const IRLS_ROUNDS: usize = 5;

/// Approximate weighted least-absolute-deviation fit by iteratively
/// reweighted least squares started at `start`.
pub fn weighted_lad(data: &WeightedPointSet, masses: &[f64], start: &Hyperplane) -> Result<OlsFit> {
    let points = data.points();
    let mut plane = start.clone();
    let mut last = None;
    for _ in 0..IRLS_ROUNDS {
        let res = abs_residuals(points, &plane)?;
        let active: Vec<f64> = res
            .iter()
            .zip(masses)
            .filter(|p| *p.1 > 0.0)
            .map(|p| *p.0)
            .collect();
        let scale = active.iter().sum::<f64>() / active.len().max(1) as f64;
        let floor = (1e-6 * scale).max(1e-12);
        let w: Vec<f64> = res
            .iter()
            .zip(masses)
            .map(|(&r, &m)| m / r.max(floor))
            .collect();
        let fit = weighted_ols(data, Some(&w))?;
        if fit.degenerate {
            return Ok(fit);
        }
        plane = fit.plane.clone();
        last = Some(fit);
    }
    Ok(last.unwrap_or(OlsFit {
        plane,
        rank: points.dim(),
        degenerate: false,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub power: Power,
}

impl Default for RegressionOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
            power: Power::L2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionOutcome {
    pub plane: Hyperplane,
    pub report: TrimmedCostReport,
    pub iterations: usize,
    pub cost_history: Vec<f64>,
    /// A refit hit a rank-deficient design; the previous plane was kept.
    pub stalled: bool,
}

/// Alternating trimmed regression: drop the `z` mass with the largest
/// absolute residuals, refit on what remains, repeat.
///
/// L2 refits are weighted least squares; L1 refits use [`weighted_lad`]
/// and are only kept when they lower the trimmed cost.
pub fn trimmed_regression_solve(
    data: &WeightedPointSet,
    z: f64,
    init: &Hyperplane,
    opts: &RegressionOptions,
) -> Result<RegressionOutcome> {
    check_outlier_mass(z, data.total_weight())?;
    let d = data.dim();
    if z >= data.total_weight() - d as f64 {
        return Err(Error::InvalidArgument(format!(
            "outlier mass {z} leaves less than {d} units of inlier mass"
        )));
    }
    let mut plane = init.clone();
    let mut report = trimmed_regression_cost(data, &plane, z, opts.power)?;
    let mut history = vec![report.cost];
    let mut iterations = 0;
    let mut stalled = false;
    while iterations < opts.max_iter {
        let masses = report.inlier_masses(data.weights());
        let fit = match opts.power {
            Power::L2 => weighted_ols(data, Some(&masses))?,
            Power::L1 => weighted_lad(data, &masses, &plane)?,
        };
        if fit.degenerate {
            log::warn!(
                "rank-deficient refit at iteration {iterations}; keeping the previous plane"
            );
            stalled = true;
            break;
        }
        iterations += 1;
        let next = trimmed_regression_cost(data, &fit.plane, z, opts.power)?;
        if opts.power == Power::L1 && next.cost > report.cost {
            break;
        }
        let previous = report.cost;
        let gain = previous - next.cost;
        plane = fit.plane;
        report = next;
        history.push(report.cost);
        if previous <= 0.0 || gain <= opts.tol * previous {
            break;
        }
    }
    Ok(RegressionOutcome {
        plane,
        report,
        iterations,
        cost_history: history,
        stalled,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInit {
    pub plane: Hyperplane,
    /// Rows of the sample the final fit used.
    pub sample: Vec<usize>,
    pub degenerate: bool,
}

/// Size of the initial regression sample, `min(max(f·z, 10 d), n)`.
pub fn init_sample_size(n: usize, d: usize, z: usize, sample_factor: usize) -> usize {
    (sample_factor * z).max(10 * d).min(n)
}

/// Ordinary least squares on a small uniform sample.
pub fn regression_init(
    points: &PointSet,
    z: usize,
    sample_factor: usize,
    seed: Seed,
) -> Result<RegressionInit> {
    if !points.has_response() {
        return Err(Error::MissingResponse);
    }
    let n = points.len();
    let mut size = init_sample_size(n, points.dim(), z, sample_factor);
    let mut attempt = 0;
    loop {
        let sample = sample_without_replacement(n, size, seed.derive(attempt))?;
        let fit = weighted_ols(&WeightedPointSet::unit(points.subset(&sample)?), None)?;
        if !fit.degenerate || attempt == 1 {
            if fit.degenerate {
                log::warn!("initial sample stays rank deficient; using the minimum-norm fit");
            }
            return Ok(RegressionInit {
                plane: fit.plane,
                sample,
                degenerate: fit.degenerate,
            });
        }
        attempt += 1;
        size = (2 * size).min(n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(r: &[&[f64]]) -> PointSet {
        PointSet::from_rows(r, true).unwrap()
    }

    #[test]
    fn residual_examples() {
        let h0 = Hyperplane::zeros(2).unwrap();
        assert_eq!(residual(&[3.0, 7.0], &h0).unwrap(), 7.0);
        let h = Hyperplane::new(vec![2.0, 1.0]).unwrap();
        assert_eq!(residual(&[3.0, 7.0], &h).unwrap(), 0.0);
        let h3 = Hyperplane::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(residual(&[1.0, 2.0, 10.0], &h3).unwrap(), 2.0);
        assert!(residual(&[1.0, 2.0], &h3).is_err());
    }

    #[test]
    fn min_max_endpoints() {
        let p = rows(&[&[2.0, 1.0], &[4.0, 2.0], &[6.0, 3.0]]);
        let (q, maps) = normalize_features(&p, RegionBox::new(10.0).unwrap()).unwrap();
        let col: Vec<f64> = q.rows().map(|r| r[0]).collect();
        assert_eq!(col, vec![0.0, 5.0, 10.0]);
        let ys: Vec<f64> = q.rows().map(|r| r[1]).collect();
        assert_eq!(ys, vec![1.0, 2.0, 3.0]);
        assert_eq!(maps.len(), 1);
    }

    #[test]
    fn identity_when_already_spanning_box() {
        let p = rows(&[&[0.0, 1.0], &[3.5, 2.0], &[10.0, 3.0]]);
        let (q, _) = normalize_features(&p, RegionBox::default()).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn constant_column_goes_to_middle() {
        let p = rows(&[&[7.0, 1.0, 0.0], &[7.0, 2.0, 1.0]]);
        let (q, _) = normalize_features(&p, RegionBox::new(4.0).unwrap()).unwrap();
        assert_eq!(q.row(0), &[2.0, 0.0, 0.0]);
        assert_eq!(q.row(1), &[2.0, 10.0 / 2.5, 1.0]);
    }

    #[test]
    fn denormalized_plane_reproduces_raw_residuals() {
        let raw = rows(&[
            &[1.0, 30.0, 5.0],
            &[2.0, 10.0, 7.5],
            &[4.0, 20.0, 1.0],
            &[8.0, 50.0, -3.0],
            &[3.0, 40.0, 2.0],
        ]);
        let (norm, maps) = normalize_features(&raw, RegionBox::default()).unwrap();
        let fit_norm = weighted_ols(&WeightedPointSet::unit(norm.clone()), None).unwrap();
        let back = denormalize_plane(&fit_norm.plane, &maps).unwrap();
        let fit_raw = weighted_ols(&WeightedPointSet::unit(raw.clone()), None).unwrap();
        for i in 0..raw.len() {
            let a = residual(raw.row(i), &back).unwrap();
            let b = residual(norm.row(i), &fit_norm.plane).unwrap();
            let c = residual(raw.row(i), &fit_raw.plane).unwrap();
            assert!((a - b).abs() < 1e-9);
            assert!((a - c).abs() < 1e-9);
        }
    }

    #[test]
    fn trimmed_costs() {
        let on_line = rows(&[&[0.0, 1.0], &[1.0, 3.0], &[2.0, 5.0]]);
        let h = Hyperplane::new(vec![2.0, 1.0]).unwrap();
        let r =
            trimmed_regression_cost(&WeightedPointSet::unit(on_line), &h, 1.0, Power::L2).unwrap();
        assert_eq!(r.cost, 0.0);

        let p = WeightedPointSet::unit(rows(&[
            &[0.0, 0.0],
            &[1.0, 1.0],
            &[2.0, 2.0],
            &[3.0, 100.0],
        ]));
        let diag = Hyperplane::new(vec![1.0, 0.0]).unwrap();
        let r1 = trimmed_regression_cost(&p, &diag, 1.0, Power::L1).unwrap();
        assert_eq!(r1.cost, 0.0);
        assert_eq!(r1.outliers, vec![(3, 1.0)]);
        let r2 = trimmed_regression_cost(&p, &diag, 0.0, Power::L2).unwrap();
        assert_eq!(r2.cost, 2352.25);
    }

    #[test]
    fn ols_exact_fits() {
        let p = WeightedPointSet::new(
            rows(&[&[0.0, 1.0], &[1.0, 3.0], &[3.0, 7.0]]),
            vec![0.5, 2.0, 7.0],
        )
        .unwrap();
        let fit = weighted_ols(&p, None).unwrap();
        assert!(!fit.degenerate);
        assert!((fit.plane.coeffs()[0] - 2.0).abs() < 1e-12);
        assert!((fit.plane.coeffs()[1] - 1.0).abs() < 1e-12);

        let two = WeightedPointSet::unit(rows(&[&[0.0, 1.0], &[2.0, 5.0]]));
        let fit = weighted_ols(&two, None).unwrap();
        assert!((fit.plane.coeffs()[0] - 2.0).abs() < 1e-12);
        assert!((fit.plane.coeffs()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ols_flags_rank_deficiency() {
        let p = WeightedPointSet::unit(rows(&[&[1.0, 2.0], &[1.0, 4.0]]));
        let fit = weighted_ols(&p, None).unwrap();
        assert!(fit.degenerate);
        // min-norm split of the mean 3 between slope·1 and intercept
        assert!((fit.plane.coeffs()[0] - 1.5).abs() < 1e-12);
        assert!((fit.plane.coeffs()[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn no_trim_matches_plain_ols() {
        let p = WeightedPointSet::unit(rows(&[
            &[0.0, 0.3],
            &[1.0, 2.9],
            &[2.0, 5.2],
            &[3.0, 6.8],
            &[4.0, 9.4],
        ]));
        let ols = weighted_ols(&p, None).unwrap().plane;
        let out = trimmed_regression_solve(
            &p,
            0.0,
            &Hyperplane::zeros(2).unwrap(),
            &RegressionOptions::default(),
        )
        .unwrap();
        for (a, b) in out.plane.coeffs().iter().zip(ols.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn solver_drops_gross_outlier() {
        let mut r: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 3.0 * i as f64 - 2.0]).collect();
        r[7][1] += 500.0;
        let p = WeightedPointSet::unit(PointSet::from_rows(&r, true).unwrap());
        for power in [Power::L1, Power::L2] {
            let opts = RegressionOptions {
                power,
                ..Default::default()
            };
            let out =
                trimmed_regression_solve(&p, 1.0, &Hyperplane::zeros(2).unwrap(), &opts).unwrap();
            assert_eq!(out.report.outliers, vec![(7, 1.0)], "{power:?}");
            assert!((out.plane.coeffs()[0] - 3.0).abs() < 1e-3);
            assert!((out.plane.coeffs()[1] + 2.0).abs() < 1e-2);
        }
    }

    #[test]
    fn solver_rejects_excess_trim() {
        let p = WeightedPointSet::unit(rows(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]));
        assert!(trimmed_regression_solve(
            &p,
            1.5,
            &Hyperplane::zeros(2).unwrap(),
            &Default::default()
        )
        .is_err());
    }

    #[test]
    fn init_recovers_noiseless_line() {
        let r: Vec<[f64; 3]> = (0..200)
            .map(|i| {
                let (a, b) = ((i % 17) as f64, (i % 11) as f64 * 0.5);
                [a, b, 0.5 * a - 2.0 * b + 4.0]
            })
            .collect();
        let p = PointSet::from_rows(&r, true).unwrap();
        let init = regression_init(&p, 5, 2, Seed(3)).unwrap();
        assert_eq!(init.sample.len(), init_sample_size(200, 3, 5, 2));
        assert_eq!(init.sample.len(), 30);
        for (a, b) in init.plane.coeffs().iter().zip([0.5, -2.0, 4.0]) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(regression_init(&p, 5, 2, Seed(3)).unwrap(), init);
    }

    #[test]
    fn init_sample_formula() {
        assert_eq!(init_sample_size(1000, 5, 100, 2), 200);
        assert_eq!(init_sample_size(1000, 5, 10, 2), 50);
        assert_eq!(init_sample_size(30, 5, 100, 2), 30);
    }
}
