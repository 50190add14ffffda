//! Chart points and seeded sampling of the coordinate box `[-1, 1]^n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A point of a coordinate chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// The first `k` coordinates.
    pub fn truncate(&self, k: usize) -> Point {
        Point(self.0[..k.min(self.0.len())].to_vec())
    }

    /// Pads with zeros up to dimension `n`.
    pub fn pad_zeros(&self, n: usize) -> Point {
        let mut c = self.0.clone();
        c.resize(n.max(c.len()), 0.0);
        Point(c)
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Seeded uniform sampler on `[-1, 1]^dim`.
pub struct Sampler {
    rng: ChaCha8Rng,
    dim: usize,
}

impl Sampler {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), dim }
    }

    pub fn next_point(&mut self) -> Point {
        Point((0..self.dim).map(|_| self.rng.random_range(-1.0..=1.0)).collect())
    }

    /// Draws `count` points accepted by `admit`, giving up after
    /// `50 * count + 100` attempts.
    pub fn sample_where<F>(&mut self, count: usize, mut admit: F) -> Result<Vec<Point>>
    where
        F: FnMut(&Point) -> bool,
    {
        let budget = 50 * count + 100;
        let mut out = Vec::with_capacity(count);
        for _ in 0..budget {
            if out.len() == count {
                break;
            }
            let p = self.next_point();
            if admit(&p) {
                out.push(p);
            }
        }
        if out.len() < count {
            return Err(Error::Sampling { requested: count, found: out.len() });
        }
        Ok(out)
    }
}

/// `count` seeded points of `[-1, 1]^dim` with no admissibility filter.
pub fn sample_box(dim: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut s = Sampler::new(dim, seed);
    (0..count).map(|_| s.next_point()).collect()
}
