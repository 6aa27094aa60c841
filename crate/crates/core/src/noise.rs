//! Reproducible Gaussian increment streams.
//!
//! Each path owns one ChaCha8 generator keyed by the master seed and selecting
//! the ChaCha stream word by `path_index`, so streams for different paths are
//! disjoint keystreams of the same key. Standard normals come from
//! `rand_distr::StandardNormal` (ziggurat), which keeps no cached state
//! between draws: a stream's output depends only on how many values have been
//! taken from it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    master_seed: u64,
    path_index: u64,
    position: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(path_index);
        Self {
            master_seed,
            path_index,
            position: 0,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// Number of values drawn so far (normals and uniforms alike).
    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.position += 1;
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.position += 1;
        self.rng.random::<f64>()
    }

    /// `count` independent `N(0, dt)` draws.
    pub fn gaussian_increments(&mut self, count: usize, dt: f64) -> Vec<f64> {
        let mut out = vec![0.0; count];
        self.fill_increments(&mut out, dt);
        out
    }

    /// Fills `out` with `N(0, dt)` draws in index order.
    pub fn fill_increments(&mut self, out: &mut [f64], dt: f64) {
        let scale = dt.sqrt();
        for x in out.iter_mut() {
            *x = scale * self.standard_normal();
        }
    }

    pub fn uniform_vec(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.uniform()).collect()
    }
}
