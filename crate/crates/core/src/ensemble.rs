//! Trajectory seeding and worker-count independent Monte Carlo reduction.
//!
//! Trajectories are grouped into fixed chunks of [`CHUNK`] indices. Each chunk
//! is reduced serially and the chunk summaries are merged in index order, so
//! the floating point result is identical for any thread pool size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;

pub const CHUNK: usize = 1024;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one trajectory. Bijective in `traj_index` for fixed
/// `(master_seed, experiment_id)`, so trajectories never share a stream.
pub fn trajectory_seed(master_seed: u64, experiment_id: u64, traj_index: u64) -> u64 {
    mix(mix(mix(master_seed) ^ experiment_id) ^ traj_index)
}

pub fn trajectory_rng(master_seed: u64, experiment_id: u64, traj_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trajectory_seed(master_seed, experiment_id, traj_index))
}

/// Running count, mean and centered second moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += d * nb / n as f64;
        self.m2 += other.m2 + d * d * na * nb / n as f64;
        self.n = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Reduce `width` per-trajectory observables over `0..n_traj` in parallel.
/// `f(i, out)` fills `out` with the observables of trajectory `i`.
pub fn reduce<F>(n_traj: usize, width: usize, f: F) -> Result<Vec<Moments>>
where
    F: Fn(u64, &mut [f64]) -> Result<()> + Sync,
{
    let n_chunks = n_traj.div_ceil(CHUNK);
    let partial: Vec<Result<Vec<Moments>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Moments::default(); width];
            let mut xs = vec![0.0; width];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                f(i as u64, &mut xs)?;
                for (m, &x) in acc.iter_mut().zip(&xs) {
                    m.push(x);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![Moments::default(); width];
    for chunk in partial {
        for (t, m) in total.iter_mut().zip(&chunk?) {
            t.merge(m);
        }
    }
    Ok(total)
}
