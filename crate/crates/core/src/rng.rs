//! Seeded random streams.
//!
//! Every stochastic routine takes a caller-owned generator. Monte Carlo loops
//! draw a [`StreamFamily`] from it and give trial `i` its own ChaCha stream,
//! so results do not depend on how trials are scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A 64-bit seeded generator that remembers its seed.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draws a fresh family of independent per-trial streams.
    pub fn split(&mut self) -> StreamFamily {
        StreamFamily::from_rng(self)
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

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Keyed family of independent streams; stream `i` is a pure function of
/// the key and `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFamily {
    key: u64,
}

impl StreamFamily {
    pub fn from_key(key: u64) -> Self {
        Self { key }
    }

    pub fn from_rng<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self { key: rng.gen() }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }
}
