//! Dense point storage.
//!
//! A [`PointSet`] is an `n × d` row-major matrix of finite reals. In the
//! regression layout the last column is the response `y` and the first
//! `d - 1` columns are features. A [`WeightedPointSet`] attaches a
//! nonnegative mass to every row; a weight `w` behaves like `w` unit points
//! stacked on top of each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::stable_sum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    n: usize,
    d: usize,
    coords: Vec<f64>,
    has_response: bool,
}

impl PointSet {
    /// Builds a point set from row-major coordinates.
    pub fn new(d: usize, coords: Vec<f64>, has_response: bool) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if coords.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if !coords.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: coords.len() % d,
            });
        }
        if has_response && d < 2 {
            return Err(Error::InvalidArgument(
                "regression layout needs at least one feature and a response".into(),
            ));
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self {
            n: coords.len() / d,
            d,
            coords,
            has_response,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], has_response: bool) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyPointSet)?;
        let d = first.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::new(d, coords, has_response)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn has_response(&self) -> bool {
        self.has_response
    }

    /// Number of feature columns (all columns for clustering data).
    pub fn feature_dim(&self) -> usize {
        if self.has_response {
            self.d - 1
        } else {
            self.d
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    /// Copies the given rows, in order, into a new point set.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} out of range for {} points",
                    self.n
                )));
            }
            coords.extend_from_slice(self.row(i));
        }
        Self::new(self.d, coords, self.has_response)
    }

    /// The response value of row `i` in the regression layout.
    pub fn response(&self, i: usize) -> f64 {
        debug_assert!(self.has_response);
        self.coords[i * self.d + self.d - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPointSet {
    points: PointSet,
    weights: Vec<f64>,
    total: f64,
}

impl WeightedPointSet {
    pub fn new(points: PointSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if let Some((row, &weight)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::BadWeight { row, weight });
        }
        let total = stable_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidArgument(
                "total weight must be positive".into(),
            ));
        }
        Ok(Self {
            points,
            weights,
            total,
        })
    }

    /// Lifts a plain point set to unit weights.
    pub fn unit(points: PointSet) -> Self {
        let n = points.len();
        Self {
            points,
            weights: vec![1.0; n],
            total: n as f64,
        }
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn into_parts(self) -> (PointSet, Vec<f64>) {
        (self.points, self.weights)
    }
}

impl From<PointSet> for WeightedPointSet {
    fn from(points: PointSet) -> Self {
        Self::unit(points)
    }
}

/// Seed of every randomized operation. Equal seeds give bit-identical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Derives an independent child seed for substream `stream`.
    pub fn derive(self, stream: u64) -> Seed {
        // splitmix64 finalizer over the pair
        let mut x = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(x ^ (x >> 31))
    }

    pub fn rng(self) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        let err = PointSet::new(2, vec![0.0, 1.0, f64::NAN, 2.0], false).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 1, col: 0 });
    }

    #[test]
    fn regression_layout_needs_two_columns() {
        assert!(PointSet::new(1, vec![1.0], true).is_err());
        let p = PointSet::new(2, vec![1.0, 2.0], true).unwrap();
        assert_eq!(p.feature_dim(), 1);
        assert_eq!(p.response(0), 2.0);
    }

    #[test]
    fn unit_lift_has_weight_n() {
        let p = PointSet::from_rows(&[[0.0], [1.0], [2.0]], false).unwrap();
        let w = WeightedPointSet::unit(p);
        assert_eq!(w.total_weight(), 3.0);
        assert!(w.weights().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn negative_weight_rejected() {
        let p = PointSet::from_rows(&[[0.0], [1.0]], false).unwrap();
        assert!(WeightedPointSet::new(p, vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn derived_seeds_differ_per_stream() {
        let s = Seed(7);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive(3), Seed(7).derive(3));
    }
}
