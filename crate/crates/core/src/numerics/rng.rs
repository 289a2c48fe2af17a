//! Seeded randomness for Monte Carlo oracles and optimizer restarts.
//!
//! Streams are ChaCha8 keyed by a `u64` seed and mapped to standard normals with
//! the ziggurat sampler, so a seed gives the same sequence on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Fractional part of the golden ratio scaled to 64 bits.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for worker/shard `index` under base `seed`: `seed ^ (GOLDEN_GAMMA * index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed ^ GOLDEN_GAMMA.wrapping_mul(index)
}

/// Reproducible stream of standard-normal draws.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Fair coin from the same underlying stream.
    pub fn next_bool(&mut self) -> bool {
        self.rng.random::<bool>()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl Iterator for NormalStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_normal())
    }
}

/// `seeded_normal_stream(seed)`: an endless iterator of N(0, 1) draws.
pub fn seeded_normal_stream(seed: u64) -> NormalStream {
    NormalStream::new(seed)
}
