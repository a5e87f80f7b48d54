//! Seeded inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simplexflow::DiscreteMeasure;

/// `atoms` points uniform in `[-1, 1]^dim` with random positive weights.
pub fn random_measure(dim: usize, atoms: usize, seed: u64) -> DiscreteMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..atoms)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let weights: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
    DiscreteMeasure::normalized(points, weights).expect("valid measure")
}

/// `count` points uniform in the unit square.
pub fn random_cloud(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect()
}
