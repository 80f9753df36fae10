//! Sampling baselines: plain uniform sampling and uniform sampling with
//! nearest-neighbour weights.

use crate::coreset::{BuilderParams, Coreset, Origin};
use crate::distance::sq_dist;
use crate::error::{Error, Result};
use crate::points::{PointSet, Seed, WeightedPointSet};
use crate::sampling::sample_without_replacement;

fn check_size(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "coreset size must lie in 1..={n}, got {m}"
        )));
    }
    Ok(())
}

/// `m` uniform points, each weighted `n / m`.
pub fn uniform_coreset(points: &PointSet, m: usize, seed: Seed) -> Result<Coreset> {
    let n = points.len();
    check_size(n, m)?;
    let source = sample_without_replacement(n, m, seed)?;
    let w = n as f64 / m as f64;
    let data = WeightedPointSet::new(points.subset(&source)?, vec![w; m])?;
    Ok(Coreset::new(
        data,
        vec![Origin::Uniform; m],
        source,
        BuilderParams::default(),
    ))
}

/// `m` uniform points, each weighted by the number of input points whose
/// nearest sample it is. Sampled points represent themselves; other ties go
/// to the smaller source index. Brute force, `O(n m d)`.
pub fn nn_coreset(points: &PointSet, m: usize, seed: Seed) -> Result<Coreset> {
    let n = points.len();
    check_size(n, m)?;
    let source = sample_without_replacement(n, m, seed)?;
    let reps = points.subset(&source)?;
    let d = points.dim();

    let nearest_rep = |i: usize| -> usize {
        if let Ok(pos) = source.binary_search(&i) {
            return pos;
        }
        let p = points.row(i);
        let mut best = (0, f64::INFINITY);
        for (j, q) in reps.coords().chunks_exact(d).enumerate() {
            let s = sq_dist(p, q);
            if s < best.1 {
                best = (j, s);
            }
        }
        best.0
    };
    #[cfg(feature = "parallel")]
    let owner: Vec<usize> = {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .with_min_len(256)
            .map(nearest_rep)
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let owner: Vec<usize> = (0..n).map(nearest_rep).collect();

    let mut counts = vec![0u64; m];
    for j in owner {
        counts[j] += 1;
    }
    let weights = counts.into_iter().map(|c| c as f64).collect();
    let data = WeightedPointSet::new(reps, weights)?;
    Ok(Coreset::new(
        data,
        vec![Origin::NnRepresentative; m],
        source,
        BuilderParams::default(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> PointSet {
        PointSet::new(1, v.to_vec(), false).unwrap()
    }

    #[test]
    fn full_uniform_sample_is_identity() {
        let p = line(&[3.0, 1.0, 2.0]);
        let s = uniform_coreset(&p, 3, Seed(0)).unwrap();
        assert_eq!(s.source(), &[0, 1, 2]);
        assert!(s.data().weights().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn uniform_weight_is_n_over_m() {
        let p = line(&(0..100).map(f64::from).collect::<Vec<_>>());
        let s = uniform_coreset(&p, 7, Seed(2)).unwrap();
        assert_eq!(s.len(), 7);
        assert!((s.total_weight() - 100.0).abs() < 1e-12);
        assert!(uniform_coreset(&p, 101, Seed(2)).is_err());
        assert!(uniform_coreset(&p, 0, Seed(2)).is_err());
    }

    #[test]
    fn nn_weights_count_assignments() {
        let p = line(&[0.0, 1.0, 10.0]);
        // find a seed whose sample is {0, 2}
        let seed = (0..1000)
            .map(Seed)
            .find(|&s| sample_without_replacement(3, 2, s).unwrap() == vec![0, 2])
            .unwrap();
        let s = nn_coreset(&p, 2, seed).unwrap();
        assert_eq!(s.data().weights(), &[2.0, 1.0]);
    }

    #[test]
    fn nn_full_sample_unit_weights() {
        let p = line(&[5.0, 5.0, 5.0, 1.0]);
        let s = nn_coreset(&p, 4, Seed(1)).unwrap();
        assert!(s.data().weights().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn nn_weights_positive_integers_summing_to_n() {
        let v: Vec<f64> = (0..300)
            .map(|i| ((i * 7919) % 1000) as f64 / 10.0)
            .collect();
        let p = line(&v);
        let s = nn_coreset(&p, 25, Seed(11)).unwrap();
        assert!(s
            .data()
            .weights()
            .iter()
            .all(|&w| w >= 1.0 && w.fract() == 0.0));
        assert_eq!(s.total_weight(), 300.0);
    }
}
