//! Deterministic random streams.
//!
//! Every stochastic component draws from a ChaCha8 stream keyed by a 64-bit
//! seed, so runs are reproducible across platforms. Independent purposes
//! (planner sampling, sensor noise) use separate ChaCha stream ids of the
//! same seed, which keeps sensor noise paired when only the planner changes.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

/// Stream id for planner sampling.
pub const PLANNER_STREAM: u64 = 0;
/// Stream id for sensor noise.
pub const NOISE_STREAM: u64 = 1;
/// Stream id for prior / initial-condition draws.
pub const INIT_STREAM: u64 = 2;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn seeded_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal(rng: &mut SimRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn uniform(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
