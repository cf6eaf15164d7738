//! Seeded random source.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`. Its stream is specified independently of
//! platform and word size, and the normal sampler (`rand_distr`'s ziggurat
//! `StandardNormal`) evaluates its tails with `libm`, so a seed fixes every
//! draw bit for bit on every target.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::vector::Vector;

/// Single-owner deterministic random stream.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream, e.g. one per subsystem of an experiment.
    pub fn fork(&mut self) -> Rng {
        Rng::new(self.inner.random())
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// `n` draws from N(mean, std²). A zero `std` yields `mean` exactly
    /// (and still advances the stream).
    pub fn gaussian(&mut self, n: usize, mean: f64, std: f64) -> Vector {
        debug_assert!(std >= 0.0);
        (0..n).map(|_| mean + std * self.standard_normal()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_std_gives_mean() {
        let v = Rng::new(7).gaussian(3, 0.0, 0.0);
        assert_eq!(v.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn same_seed_same_stream() {
        let a = Rng::new(7).gaussian(64, 0.0, 1.0);
        let b = Rng::new(7).gaussian(64, 0.0, 1.0);
        assert_eq!(a, b);
        let c = Rng::new(8).gaussian(64, 0.0, 1.0);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_mean_is_near_zero() {
        let v = Rng::new(7).gaussian(100_000, 0.0, 1.0);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64;
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = Rng::new(1);
        assert!((0..1000).all(|_| rng.below(5) < 5));
    }

    #[test]
    fn forks_are_reproducible() {
        let mut a = Rng::new(3);
        let mut b = Rng::new(3);
        assert_eq!(a.fork().uniform(), b.fork().uniform());
    }
}
