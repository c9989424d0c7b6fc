//! Seeded sampling of chart points for pointwise certification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sampling {
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
    /// Relative tolerance for pass/fail decisions.
    pub tol: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { points: 20, lo: -1.0, hi: 1.0, seed: 42, tol: 1e-9 }
    }
}

impl Sampling {
    pub fn with_tol(self, tol: f64) -> Self {
        Sampling { tol, ..self }
    }

    pub fn with_box(self, lo: f64, hi: f64) -> Self {
        Sampling { lo, hi, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Sampling { seed, ..self }
    }

    /// `self.points` uniform points in `[lo, hi]^dim`; identical for identical settings.
    pub fn sample_points(&self, dim: usize) -> Vec<Vec<f64>> {
        self.sample_n(self.points, dim, 0)
    }

    /// `count` uniform vectors drawn from an independent stream labelled `stream`.
    pub fn sample_n(&self, count: usize, dim: usize, stream: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let width = self.hi - self.lo;
        (0..count).map(|_| (0..dim).map(|_| self.lo + width * rng.random::<f64>()).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_seeded_and_boxed() {
        let s = Sampling::default();
        let a = s.sample_points(3);
        assert_eq!(a, s.sample_points(3));
        assert_eq!(a.len(), 20);
        assert!(a.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
        assert_ne!(a, s.with_seed(7).sample_points(3));
        assert_ne!(s.sample_n(5, 2, 0), s.sample_n(5, 2, 1));
    }
}
