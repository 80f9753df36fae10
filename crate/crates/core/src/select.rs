//! Order-statistic selection with the crate-wide tie rule: larger value first,
//! and among equal values the smaller index first.
//!
//! Both routines run a quickselect over an index permutation with random
//! pivots. Because the key order is total, the selected set does not depend
//! on the pivot sequence, only the running time does.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::points::Seed;

#[inline]
fn ranks_above(values: &[f64], a: usize, b: usize) -> bool {
    let (va, vb) = (values[a], values[b]);
    va > vb || (va == vb && a < b)
}

/// Partitions `idx[lo..hi]` around a random pivot. Returns the pivot's final
/// slot; entries before it rank above the pivot, entries after rank below.
fn partition<R: Rng>(
    values: &[f64],
    idx: &mut [usize],
    lo: usize,
    hi: usize,
    rng: &mut R,
) -> usize {
    let p = rng.random_range(lo..hi);
    idx.swap(p, hi - 1);
    let pivot = idx[hi - 1];
    let mut store = lo;
    for i in lo..hi - 1 {
        if ranks_above(values, idx[i], pivot) {
            idx.swap(i, store);
            store += 1;
        }
    }
    idx.swap(store, hi - 1);
    store
}

fn pivot_rng(len: usize, salt: u64) -> rand_chacha::ChaCha8Rng {
    Seed(len as u64 ^ salt.rotate_left(32)).rng()
}

/// Indices of the `m` largest values plus the largest value left unselected
/// (`0.0` when everything is selected). Indices come back sorted ascending.
pub fn select_top_m(values: &[f64], m: usize) -> Result<(Vec<usize>, f64)> {
    let n = values.len();
    if m > n {
        return Err(Error::SelectionTooLarge {
            requested: m,
            available: n,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if m > 0 && m < n {
        let mut rng = pivot_rng(n, m as u64);
        let (mut lo, mut hi) = (0, n);
        loop {
            let s = partition(values, &mut idx, lo, hi, &mut rng);
            if s == m || s + 1 == m {
                break;
            }
            if s > m {
                hi = s;
            } else {
                lo = s + 1;
            }
        }
    }
    let threshold = idx[m..]
        .iter()
        .map(|&i| values[i])
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        })
        .unwrap_or(0.0);
    let mut selected = idx[..m].to_vec();
    selected.sort_unstable();
    Ok((selected, threshold))
}

/// Removes `mass` units of weight from the largest values.
///
/// Returns `(index, removed_weight)` pairs sorted by index. Every listed
/// point except possibly the one with the smallest value among them is
/// removed whole; that boundary point may lose only part of its weight.
/// Points with zero weight are never listed.
pub fn trim_heaviest(values: &[f64], weights: &[f64], mass: f64) -> Vec<(usize, f64)> {
    debug_assert_eq!(values.len(), weights.len());
    let n = values.len();
    if mass <= 0.0 || n == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = pivot_rng(n, mass.to_bits());
    let (mut lo, mut hi) = (0, n);
    let mut target = mass;
    let (front_end, boundary) = loop {
        if lo >= hi {
            // only reachable when `mass` exceeds the total weight
            break (lo, None);
        }
        let s = partition(values, &mut idx, lo, hi, &mut rng);
        let front: f64 = idx[lo..s]
            .iter()
            .map(|&i| weights[i])
            .collect::<CompensatedSum>()
            .value();
        let w_pivot = weights[idx[s]];
        if front >= target && s > lo {
            hi = s;
        } else if front + w_pivot >= target {
            break (s, Some((idx[s], target - front)));
        } else {
            target -= front + w_pivot;
            lo = s + 1;
        }
    };
    let mut out: Vec<(usize, f64)> = idx[..front_end]
        .iter()
        .map(|&i| (i, weights[i]))
        .chain(boundary)
        .filter(|&(_, w)| w > 0.0)
        .collect();
    out.sort_unstable_by_key(|&(i, _)| i);
    out
}
