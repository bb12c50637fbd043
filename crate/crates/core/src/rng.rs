//! Reproducible random streams.
//!
//! Every draw in the crate goes through [`SeededRng`], a ChaCha8 generator
//! (`rand_chacha::ChaCha8Rng`) keyed with `seed_from_u64(seed)` and switched to
//! the 64-bit stream `stream`. ChaCha is counter based, so distinct streams
//! under one seed are independent and a given `(seed, stream)` pair produces the
//! same draws on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::Vector;

/// Name of the generator algorithm, pinned for reproducibility reports.
pub const ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64 + set_stream)";

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// One draw from the standard normal distribution.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn normal_vector(&mut self, len: usize) -> Vector {
        Vector::from_fn(len, |_, _| self.normal())
    }

    /// Uniform draw on `[lo, hi)`; returns `lo` when the interval is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi > lo {
            self.inner.random_range(lo..hi)
        } else {
            lo
        }
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a hash, used to fold experiment identifiers into seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seed for one Monte Carlo trial.
///
/// `mix64(mix64(mix64(base ^ fnv1a64(experiment)) ^ n) ^ trial)`: each trial's
/// randomness depends only on its own coordinates, so adding or removing
/// entries of a sweep never reshuffles the others.
pub fn trial_seed(base: u64, experiment: &str, n_collect: u64, trial: u64) -> u64 {
    let h = mix64(base ^ fnv1a64(experiment.as_bytes()));
    let h = mix64(h ^ n_collect);
    mix64(h ^ trial)
}
