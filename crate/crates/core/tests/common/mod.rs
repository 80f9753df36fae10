//! Oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use outlier_coreset::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `‖a − b‖ / ‖b‖`.
pub fn rel_vec(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

pub fn count_increases(history: &[f64], slack: f64) -> usize {
    history
        .windows(2)
        .filter(|w| w[1] > w[0] * (1.0 + slack))
        .count()
}

/// Expand every point into quarter-mass copies, sort by distance, drop the
/// `4z` largest copies and average what is left.
pub fn expand_sort_drop(dist: &[f64], weights: &[f64], z: f64, power: Power) -> f64 {
    let mut units = Vec::new();
    for (&d, &w) in dist.iter().zip(weights) {
        let copies = (w * 4.0).round() as usize;
        assert_eq!(copies as f64, w * 4.0, "weights must be multiples of 1/4");
        units.extend(std::iter::repeat_n(d, copies));
    }
    units.sort_by(|a, b| b.total_cmp(a));
    let drop = (z * 4.0).round() as usize;
    let total: f64 = weights.iter().sum();
    let kept: f64 = units[drop..]
        .iter()
        .map(|&d| match power {
            Power::L1 => d,
            Power::L2 => d * d,
        })
        .sum();
    0.25 * kept / (total - z)
}

pub fn brute_cluster_distances(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            centers
                .iter()
                .map(|c| {
                    p.iter()
                        .zip(c)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn brute_residuals(points: &[Vec<f64>], h: &[f64]) -> Vec<f64> {
    let d = h.len();
    points
        .iter()
        .map(|p| {
            let fit: f64 = (0..d - 1).map(|j| p[j] * h[j]).sum::<f64>() + h[d - 1];
            (p[d - 1] - fit).abs()
        })
        .collect()
}

fn coord<R: Rng>(rng: &mut R, integral: bool) -> f64 {
    if integral {
        f64::from(rng.random_range(-5..=5))
    } else {
        rng.random_range(-10.0..10.0)
    }
}

pub struct SmallInstance {
    pub cluster_points: Vec<Vec<f64>>,
    pub centers: Vec<Vec<f64>>,
    pub reg_points: Vec<Vec<f64>>,
    pub plane: Vec<f64>,
    pub weights: Vec<f64>,
    pub z: f64,
}

/// Tiny instance (n ≤ 12). Weighted instances use quarter-multiple weights
/// and an outlier mass that splits some point.
pub fn random_small_instance(rng: &mut ChaCha8Rng, weighted: bool) -> SmallInstance {
    loop {
        let n = rng.random_range(2..=12);
        let integral = rng.random_bool(0.5);
        let dc = rng.random_range(1..=3);
        let k = rng.random_range(1..=3);
        let dr = rng.random_range(2..=4);
        let cluster_points = (0..n)
            .map(|_| (0..dc).map(|_| coord(rng, integral)).collect())
            .collect();
        let centers = (0..k)
            .map(|_| (0..dc).map(|_| coord(rng, integral)).collect())
            .collect();
        let reg_points = (0..n)
            .map(|_| (0..dr).map(|_| coord(rng, integral)).collect())
            .collect();
        let plane = (0..dr).map(|_| coord(rng, integral)).collect();
        let (weights, z) = if weighted {
            let w: Vec<f64> = (0..n)
                .map(|_| f64::from(rng.random_range(1..=12)) / 4.0)
                .collect();
            let total: f64 = w.iter().sum();
            let quarters = (total * 4.0) as u32;
            let z = f64::from(rng.random_range(0..quarters)) / 4.0;
            (w, z)
        } else {
            (vec![1.0; n], f64::from(rng.random_range(0..n as u32)))
        };
        let inst = SmallInstance {
            cluster_points,
            centers,
            reg_points,
            plane,
            weights,
            z,
        };
        if !weighted || inst.has_split_boundary() {
            return inst;
        }
    }
}

impl SmallInstance {
    fn cluster_data(&self) -> WeightedPointSet {
        let p = PointSet::from_rows(&self.cluster_points, false).unwrap();
        WeightedPointSet::new(p, self.weights.clone()).unwrap()
    }

    fn reg_data(&self) -> WeightedPointSet {
        let p = PointSet::from_rows(&self.reg_points, true).unwrap();
        WeightedPointSet::new(p, self.weights.clone()).unwrap()
    }

    fn has_split_boundary(&self) -> bool {
        let c = CenterSet::from_rows(&self.centers).unwrap();
        let r = trimmed_cluster_cost(&self.cluster_data(), &c, self.z, Power::L1).unwrap();
        let h = Hyperplane::new(self.plane.clone()).unwrap();
        let s = trimmed_regression_cost(&self.reg_data(), &h, self.z, Power::L1).unwrap();
        let split =
            |rep: &TrimmedCostReport| rep.outliers.iter().any(|&(i, m)| m < self.weights[i]);
        split(&r) && split(&s)
    }

    /// Largest relative gap between library and oracle over both tasks and
    /// both powers.
    pub fn max_oracle_gap(&self) -> f64 {
        let c = CenterSet::from_rows(&self.centers).unwrap();
        let h = Hyperplane::new(self.plane.clone()).unwrap();
        let cd = brute_cluster_distances(&self.cluster_points, &self.centers);
        let rd = brute_residuals(&self.reg_points, &self.plane);
        let mut worst = 0.0f64;
        for power in [Power::L1, Power::L2] {
            let a = trimmed_cluster_cost(&self.cluster_data(), &c, self.z, power).unwrap();
            worst = worst.max(rel(
                a.cost,
                expand_sort_drop(&cd, &self.weights, self.z, power),
            ));
            assert!((a.outlier_weight() - self.z).abs() <= 1e-12);
            let b = trimmed_regression_cost(&self.reg_data(), &h, self.z, power).unwrap();
            worst = worst.max(rel(
                b.cost,
                expand_sort_drop(&rd, &self.weights, self.z, power),
            ));
            assert!((b.outlier_weight() - self.z).abs() <= 1e-12);
        }
        worst
    }
}

/// Weighted syncluster instance with injected outliers and a random
/// initial center set.
pub fn kmeans_instance(s: u64) -> (WeightedPointSet, CenterSet, f64) {
    let g = gen_syncluster(600, 2, 3, Seed(s)).unwrap();
    let (p, _) = inject_outliers(&g.points, 20, NoiseKind::Gauss, 50.0, Seed(s).derive(1)).unwrap();
    let mut rng = Seed(s).derive(2).rng();
    let weights: Vec<f64> = if s.is_multiple_of(2) {
        vec![1.0; p.len()]
    } else {
        (0..p.len()).map(|_| rng.random_range(0.5..2.0)).collect()
    };
    let init_rows: Vec<Vec<f64>> = (0..3)
        .map(|_| p.row(rng.random_range(0..p.len())).to_vec())
        .collect();
    let data = WeightedPointSet::new(p, weights).unwrap();
    (data, CenterSet::from_rows(&init_rows).unwrap(), 20.0)
}

/// `y = 2x + 1 + N(0, 1)` on `x ∈ [0, 10]`, n = 10 000, with 500 responses
/// shifted by ±10⁴.
pub fn planted_line(s: u64) -> (WeightedPointSet, Hyperplane) {
    let mut rng = Seed(s).rng();
    let n = 10_000;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random_range(0.0..=10.0);
        let e: f64 = StandardNormal.sample(&mut rng);
        rows.push([x, 2.0 * x + 1.0 + e]);
    }
    let outliers =
        outlier_coreset::sampling::sample_without_replacement(n, 500, Seed(s).derive(1)).unwrap();
    for i in outliers {
        rows[i][1] += if rng.random_bool(0.5) { 1e4 } else { -1e4 };
    }
    let p = PointSet::from_rows(&rows, true).unwrap();
    (
        WeightedPointSet::unit(p),
        Hyperplane::new(vec![2.0, 1.0]).unwrap(),
    )
}

/// Well-conditioned weighted regression instance with `d − 1` features.
pub fn random_ols_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
) -> (WeightedPointSet, Vec<f64>) {
    let h: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        let mut y = h[d - 1];
        for hj in &h[..d - 1] {
            let x = rng.random_range(0.0..10.0);
            y += hj * x;
            coords.push(x);
        }
        let e: f64 = StandardNormal.sample(rng);
        coords.push(y + e);
    }
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let p = PointSet::new(d, coords, true).unwrap();
    (WeightedPointSet::new(p, w).unwrap(), h)
}

/// Solves `(Xᵀ W X) h = Xᵀ W y` by Gaussian elimination with partial pivoting.
pub fn normal_equations(data: &WeightedPointSet) -> Vec<f64> {
    let d = data.dim();
    let mut a = vec![vec![0.0; d + 1]; d];
    for (row, &w) in data.points().rows().zip(data.weights()) {
        let mut x = row[..d - 1].to_vec();
        x.push(1.0);
        let y = row[d - 1];
        for i in 0..d {
            for j in 0..d {
                a[i][j] += w * x[i] * x[j];
            }
            a[i][d] += w * x[i] * y;
        }
    }
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for r in col + 1..d {
            let f = a[r][col] / a[col][col];
            for c in col..=d {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut h = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|j| a[i][j] * h[j]).sum();
        h[i] = (a[i][d] - s) / a[i][i];
    }
    h
}
