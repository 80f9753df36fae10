//! Seeded uniform sampling.

use crate::error::{Error, Result};
use crate::points::Seed;

/// Draws `m` distinct indices uniformly from `0..population`, sorted ascending.
pub fn sample_without_replacement(population: usize, m: usize, seed: Seed) -> Result<Vec<usize>> {
    if m > population {
        return Err(Error::SelectionTooLarge {
            requested: m,
            available: population,
        });
    }
    if m == population {
        return Ok((0..population).collect());
    }
    let mut rng = seed.rng();
    let mut out = rand::seq::index::sample(&mut rng, population, m).into_vec();
    out.sort_unstable();
    Ok(out)
}
