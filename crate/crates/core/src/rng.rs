//! Random streams used by the noise generators and the experiment harness.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded through
//! [`SeedableRng::seed_from_u64`]. The stream is specified by the `rand_chacha`
//! crate and identical on every platform. Experiment trials derive their seeds
//! with [`split_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type NoiseRng = ChaCha8Rng;

pub fn stream(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of sweep level `level`:
/// `mix64(mix64(master) ^ (level << 32 | trial))`.
///
/// For a fixed master seed the map is injective on `level, trial < 2³²`.
pub fn split_seed(master: u64, level: u32, trial: u32) -> u64 {
    let key = ((level as u64) << 32) | trial as u64;
    mix64(mix64(master) ^ key)
}
