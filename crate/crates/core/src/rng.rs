//! Deterministic random-number contract.
//!
//! Every stochastic operation in the toolkit draws from a [`SeededRng`]: a
//! ChaCha12 stream seeded from a single `u64`. Identical seed + identical
//! draw sequence gives bit-identical output on every platform, and child
//! streams derived from `(seed, tag)` make results independent of thread
//! scheduling.

use rand::{Error, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Identifier recorded in every output manifest next to the seed.
pub const RNG_ALGORITHM: &str = "chacha12";

/// SplitMix64 finalizer, used to derive child seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// FNV-1a over a byte string, for deriving child streams from names.
pub fn hash_tag(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// A seeded, portable PRNG stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha12Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream for sub-task `tag`. Derivation depends only on
    /// `(self.seed, tag)`, never on how many draws the parent has made.
    pub fn child(&self, tag: u64) -> SeededRng {
        SeededRng::new(splitmix64(self.seed ^ splitmix64(tag)))
    }

    /// Child stream keyed by a name (video id, scenario name, ...).
    pub fn child_named(&self, tag: &str) -> SeededRng {
        self.child(hash_tag(tag))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), Error> {
        self.inner.try_fill_bytes(dest)
    }
}
