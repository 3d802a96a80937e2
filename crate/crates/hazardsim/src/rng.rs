//! Deterministic random streams.
//!
//! Every source of randomness in a run is a `RandomStream` keyed by
//! `(global_seed, stream_key)`. Streams are backed by ChaCha8, which is
//! counter-based: the same key always yields the same sequence, on every
//! platform, and drawing from one stream never advances another. Vehicles use
//! their own id as the stream key so that removing or respawning one vehicle
//! cannot perturb the randomness seen by any other.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reserved stream keys for non-vehicle randomness. Vehicle streams use the
/// vehicle id directly, so reserved keys live at the top of the key space.
pub mod stream_keys {
    /// Network generation (signal offsets).
    pub const WORLD_GEN: u64 = u64::MAX;
    /// Scenario assembly (spawn shuffle, behavior assignment).
    pub const SCHEDULING: u64 = u64::MAX - 1;
    /// Respawn point selection after collisions.
    pub const RESPAWN: u64 = u64::MAX - 2;
    /// Standalone sampler audits (`sample` subcommand).
    pub const SAMPLER_AUDIT: u64 = u64::MAX - 3;
}

const UNIT_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// A deterministic substream of the run's global seed.
#[derive(Clone, Debug)]
pub struct RandomStream {
    global_seed: u64,
    stream_key: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(global_seed: u64, stream_key: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(global_seed);
        rng.set_stream(stream_key);
        Self {
            global_seed,
            stream_key,
            rng,
        }
    }

    pub fn global_seed(&self) -> u64 {
        self.global_seed
    }

    pub fn stream_key(&self) -> u64 {
        self.stream_key
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform value in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIT_SCALE
    }

    /// Uniform value in `(0, 1]`; safe to pass through `ln`.
    #[inline]
    pub fn next_unit_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * UNIT_SCALE
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_unit() < p
    }

    /// Uniform index in `[0, n)`. `n` must be nonzero and small relative to
    /// 2^64; the modulo bias is negligible for the index ranges used here.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_index(i + 1);
            items.swap(i, j);
        }
    }
}
