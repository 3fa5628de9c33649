//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! whose seed is derived from a master seed and a counter, so results do not
//! depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `(seed, counter)`.
pub fn derive_seed(seed: u64, counter: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(counter.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Generator for stream `stream` of `seed`. Streams of one seed never overlap.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
