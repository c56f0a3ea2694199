//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by a 64-bit
//! seed and a stream id. Monte Carlo trial `t` of a run seeded with `s` uses
//! the seed `s ^ t`; within a trial, the covariance, Gaussian samples and
//! dither come from distinct stream ids so they never share state and can be
//! generated in any order or on any thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id for random covariance synthesis.
pub const COVARIANCE_STREAM: u64 = 1;
/// Stream id for complex Gaussian snapshots.
pub const SAMPLE_STREAM: u64 = 2;
/// Stream id for quantization dither.
pub const DITHER_STREAM: u64 = 3;

/// Generator for `(seed, stream)`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of Monte Carlo trial `trial` in a run seeded with `base`.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    base ^ trial
}
