//! Nearest-center distances.

use crate::error::{Error, Result};
use crate::points::PointSet;

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Distance to the closest row of `centers` and that row's index
/// (smallest index on ties).
#[inline]
pub(crate) fn nearest(p: &[f64], centers: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.chunks_exact(d).enumerate() {
        let s = sq_dist(p, c);
        if s < best.1 {
            best = (j, s);
        }
    }
    (best.0, best.1.sqrt())
}

fn check(points: &PointSet, centers: &[f64], d: usize) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    if d != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            found: d,
        });
    }
    Ok(())
}

/// Per point: index of and Euclidean distance to the nearest center.
/// `centers` is row-major with `d` columns.
pub fn nearest_centers(
    points: &PointSet,
    centers: &[f64],
    d: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    check(points, centers, d)?;
    #[cfg(feature = "parallel")]
    let pairs: Vec<(usize, f64)> = {
        use rayon::prelude::*;
        points
            .coords()
            .par_chunks_exact(d)
            .with_min_len(1024)
            .map(|p| nearest(p, centers, d))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let pairs: Vec<(usize, f64)> = points.rows().map(|p| nearest(p, centers, d)).collect();
    Ok(pairs.into_iter().unzip())
}

/// Euclidean distance from every point to its nearest center.
pub fn min_distances(points: &PointSet, centers: &[f64], d: usize) -> Result<Vec<f64>> {
    Ok(nearest_centers(points, centers, d)?.1)
}
