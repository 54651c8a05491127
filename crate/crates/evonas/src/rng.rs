//! Seeded random number generation.
//!
//! Everything stochastic in this crate flows through [`Rng`], a thin wrapper
//! over ChaCha8 that exposes exactly the draw shapes the search needs. The
//! wrapper owns the bit-to-value conversions so a given seed produces the
//! same stream on every platform, independent of `rand` version details.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Deterministic generator: identical seeds yield identical streams.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    chacha: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            chacha: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seed this generator was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.chacha.next_u64()
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..len`. `len` must be nonzero.
    pub fn index(&mut self, len: usize) -> usize {
        debug_assert!(len > 0);
        // Widening multiply maps the 64-bit draw onto the range without
        // modulo bias worth speaking of.
        ((self.next_u64() as u128 * len as u128) >> 64) as usize
    }

    /// Bernoulli draw: true with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        self.f64() < p
    }
}

/// Derives a child seed from a base seed and a list of context labels.
///
/// Used to give every (strategy stage, repetition, purpose) its own
/// independent stream while staying reproducible from one top-level seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// SplitMix64 finalizer; full-avalanche mixing of one word.
pub(crate) fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
