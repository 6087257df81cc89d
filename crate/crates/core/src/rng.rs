//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from ChaCha8 (the `rand_chacha`
//! implementation), keyed by a 64-bit seed through `SeedableRng::seed_from_u64`.
//! The output is platform independent, so iteration counts reproduce exactly
//! across machines. Problem generation and block sampling use different
//! ChaCha stream ids, so one seed can drive both without the streams overlapping.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const PROBLEM_STREAM: u64 = 0;
pub const SAMPLER_STREAM: u64 = 1;

pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sampler_rng(seed: u64) -> Rng {
    seeded(seed, SAMPLER_STREAM)
}

pub fn problem_rng(seed: u64) -> Rng {
    seeded(seed, PROBLEM_STREAM)
}
