//! Reproducible Wiener increments.
//!
//! Every trajectory draws from its own ChaCha8 stream, so an ensemble gives
//! the same numbers whether it runs serially or on many threads. Uniforms are
//! taken from the top 53 bits of each `u64` and turned into normal variates
//! with the polar Box–Muller transform. The logarithm comes from `libm` so
//! results do not depend on the platform's C library.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HALF_UNIT: f64 = 1.0 / (1u64 << 51) as f64;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` in the ensemble keyed by `master`.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

#[derive(Clone, Debug)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `(-1, 1)`.
    fn symmetric_unit(&mut self) -> f64 {
        // 52 random bits, offset by half a unit so neither end is reachable.
        ((self.rng.next_u64() >> 12) as f64 + 0.5) * HALF_UNIT - 1.0
    }

    /// Marsaglia's polar form of the Box–Muller transform.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = self.symmetric_unit();
            let v = self.symmetric_unit();
            let s = u * u + v * v;
            if s < 1.0 && s > 0.0 {
                let factor = (-2.0 * libm::log(s) / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Fills `out` with independent `Normal(0, dt)` increments.
    pub fn wiener_increments(&mut self, dt: f64, out: &mut [f64]) {
        let scale = dt.sqrt();
        for w in out {
            *w = scale * self.standard_normal();
        }
    }
}
