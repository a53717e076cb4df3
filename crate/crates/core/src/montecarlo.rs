//! Batched Monte Carlo with deterministic per-batch streams.
//!
//! A run with master seed `s` splits its samples into batches of [`BATCH`];
//! batch `b` draws from ChaCha8 seeded with `s` on stream `b`. Batch results
//! are reduced pairwise in batch order, so the outcome does not depend on the
//! number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::parallel::{pairwise_sum, par_map_range};

pub type McRng = ChaCha8Rng;

pub const BATCH: usize = 1 << 14;

/// Seed used when neither the caller nor the environment provides one.
pub const DEFAULT_SEED: u64 = 20_150_601;

pub fn batch_rng(seed: u64, batch: u64) -> McRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(batch);
    r
}

/// Runs `f(rng, n)` on every batch and sums the returned accumulators.
pub fn batched<const N: usize, F>(seed: u64, samples: usize, f: F) -> [f64; N]
where
    F: Fn(&mut McRng, usize) -> [f64; N] + Send + Sync,
{
    let nb = samples.div_ceil(BATCH);
    let parts = par_map_range(nb, |b| {
        let n = BATCH.min(samples - b * BATCH);
        let mut rng = batch_rng(seed, b as u64);
        f(&mut rng, n)
    });
    let mut out = [0.0; N];
    let mut buf = Vec::with_capacity(nb);
    for (k, o) in out.iter_mut().enumerate() {
        buf.clear();
        buf.extend(parts.iter().map(|p| p[k]));
        *o = pairwise_sum(&buf);
    }
    out
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// Mean and SE = sd/√n from Σx and Σx² over n draws.
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize, seed: u64) -> Self {
        if n == 0 {
            return MCEstimate { value: f64::NAN, std_error: f64::NAN, samples: 0, seed };
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { f64::NAN };
        MCEstimate { value: mean, std_error: (var / nf).sqrt(), samples: n, seed }
    }

    pub fn scaled(self, c: f64) -> Self {
        MCEstimate { value: c * self.value, std_error: c.abs() * self.std_error, ..self }
    }

    /// |self - other| in units of the combined standard error.
    pub fn z_distance(&self, other: &MCEstimate) -> f64 {
        (self.value - other.value).abs() / self.std_error.hypot(other.std_error)
    }
}

/// Master seed: the explicit value, else `STEINLAB_SEED`, else [`DEFAULT_SEED`].
pub fn resolve_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var("STEINLAB_SEED").ok().and_then(|s| s.trim().parse().ok()))
        .unwrap_or(DEFAULT_SEED)
}
