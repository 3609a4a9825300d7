//! Seeded random probe points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `count` points of dimension `dim`, each coordinate uniform in `range`.
///
/// ChaCha8 is used so that a given seed produces the same points on every
/// platform.
pub fn probe_points(dim: usize, count: usize, seed: u64, range: (f64, f64)) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(range.0..=range.1)).collect())
        .collect()
}
