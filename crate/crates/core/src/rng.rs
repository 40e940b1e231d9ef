//! Deterministic random streams for problem data and initialization.
//!
//! The generator is SplitMix64 (state += 0x9E3779B97F4A7C15, then the
//! Stafford "mix13" finalizer). Uniforms take the top 53 bits of each output
//! scaled by 2⁻⁵³. Normals use one Box–Muller draw per pair of outputs:
//! `u1 = (x₁>>11 + 1)·2⁻⁵³` (so `u1 ∈ (0, 1]`), `u2 = (x₂>>11)·2⁻⁵³`,
//! `z = √(−2 ln u1)·cos(2π u2)`; the sine half is discarded.

use std::f64::consts::TAU;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Debug)]
pub struct Rng {
    inner: SplitMix64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Standard normal.
    pub fn normal(&mut self) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * TWO_POW_NEG_53;
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }
}
