//! Seeded sampling. The generator is pinned to ChaCha8 seeded through
//! `SeedableRng::seed_from_u64`, so outputs are identical across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SampleRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` independent standard normal values.
pub fn gaussian_vec(rng: &mut SampleRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform value in `[lo, hi)`.
pub fn uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Log-uniform value in `[lo, hi)`, `lo > 0`.
pub fn log_uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    uniform(rng, lo.ln(), hi.ln()).exp()
}
