//! Seeded random streams.
//!
//! The generator is xoshiro256++ seeded through SplitMix64 (`seed_from_u64`).
//! Normal draws use the ziggurat sampler of `rand_distr::StandardNormal`.
//! Streams are reproducible within this implementation only.

use rand::{Rng as _, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for sub-stream `stream`, a pure function of
    /// this generator's seed (not of how much of it has been consumed).
    pub fn derive(&self, stream: u64) -> Rng {
        Rng::new(splitmix(self.seed ^ splitmix(stream.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `n` i.i.d. draws from `N(0, sigma^2)`.
pub fn gaussian(rng: &mut Rng, n: usize, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::config(format!(
            "noise std must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(vec![0.0; n]);
    }
    Ok((0..n).map(|_| sigma * rng.standard_normal()).collect())
}
