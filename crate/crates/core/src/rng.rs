//! Seeded random stream shared by every stochastic draw in a run.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`. Every derived draw below is a fixed function of
//! `next_u64` so trajectories only depend on the ChaCha8 keystream:
//!
//! * `unit()`      = `(next_u64() >> 11) * 2^-53`, uniform in `[0, 1)`
//! * `below(n)`    = `(next_u64() as u128 * n) >> 64`, uniform in `0..n`
//! * `bernoulli(p)`= `unit() < p`
//! * `direction()` = angle `2π·unit()`, returned as a unit vector

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::vec2::Vec2;

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn direction(&mut self) -> Vec2 {
        let theta = std::f64::consts::TAU * self.unit();
        Vec2::new(theta.cos(), theta.sin())
    }

    /// Uniform point in `[0, width) x [0, height)`; x is drawn first.
    pub fn point_in(&mut self, width: f64, height: f64) -> Vec2 {
        let x = self.uniform(0.0, width);
        let y = self.uniform(0.0, height);
        Vec2::new(x, y)
    }

    /// Fisher-Yates, swapping from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
