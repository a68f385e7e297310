//! Seeded random substreams.
//!
//! Every image gets its own ChaCha8 stream keyed by `mix(master_seed,
//! image_index)`, so batch jobs can run in any order or thread count and
//! still draw identical samples. Gaussians come from Box–Muller on two
//! uniforms drawn in a fixed order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the substream for one image of a batch.
pub fn derive_seed(master_seed: u64, image_index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ image_index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn substream(master_seed: u64, image_index: u64) -> Self {
        Self::from_seed(derive_seed(master_seed, image_index))
    }

    /// Independent child stream; `self` advances by one word.
    pub fn fork(&mut self) -> Self {
        let s = self.next_u64();
        Self::from_seed(splitmix64(s))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [lo, hi] (inclusive), via rejection to avoid bias.
    pub fn int_range(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        let span = hi - lo;
        if span == u64::MAX {
            return self.next_u64();
        }
        let n = span + 1;
        let zone = u64::MAX - (u64::MAX % n) - 1;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return lo + v % n;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal via Box–Muller. The first call of each pair consumes
    /// u1 then u2 and returns the cosine branch; the sine branch is cached.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    /// Chi-square with one degree of freedom.
    pub fn chi_square_1(&mut self) -> f64 {
        let z = self.standard_normal();
        z * z
    }
}
