//! Deterministic Gaussian streams keyed by (seed, replication, agent).
//!
//! Each key maps to its own ChaCha8 stream: the seed fixes the key and
//! `replication << 32 | agent` selects the stream id, so a draw never
//! depends on which thread asked for it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl Iterator for GaussianStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(StandardNormal.sample(&mut self.rng))
    }
}

/// Standard normal stream for one (replication, agent) pair.
///
/// Replication and agent indices are truncated to 32 bits each.
pub fn rng_stream(seed: u64, replication: u64, agent: u64) -> GaussianStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replication & 0xffff_ffff) << 32) | (agent & 0xffff_ffff));
    GaussianStream { rng }
}

/// Source of standard normal increments for simulated agents.
pub trait NoiseSource: Sync {
    fn fill(&self, replication: u64, agent: u64, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct CounterNoise {
    pub seed: u64,
}

impl CounterNoise {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl NoiseSource for CounterNoise {
    fn fill(&self, replication: u64, agent: u64, out: &mut [f64]) {
        for (slot, z) in out.iter_mut().zip(rng_stream(self.seed, replication, agent)) {
            *slot = z;
        }
    }
}

/// All increments zero; simulated paths collapse to their means.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn fill(&self, _replication: u64, _agent: u64, out: &mut [f64]) {
        out.fill(0.0);
    }
}
