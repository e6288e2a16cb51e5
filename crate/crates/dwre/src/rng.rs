//! Seed derivation and counter-based random streams.
//!
//! Every random decision in the crate is drawn from a ChaCha8 stream keyed
//! by `(seed, stream index)`, so a point's coordinates, mark and thinning
//! coin do not depend on the order in which points are visited.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream reserved for the point count of a Poisson sample.
pub const COUNT_STREAM: u64 = u64::MAX;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `index` of an experiment with base seed `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(0x5151_5151)))
}

/// Independent stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
