//! Seed derivation for reproducible, splittable random streams.
//!
//! Every random stream in the pipeline is a [`ChaCha8Rng`] whose seed is a
//! mix of the master seed and a purpose tag, so that epoch `e` draws the same
//! numbers whether it runs straight through or after a resume.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags.
pub const TAG_INIT: u64 = 0x1;
pub const TAG_EPOCH: u64 = 0x2;
pub const TAG_EVAL: u64 = 0x3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `(master, tag, index)` into one 64-bit seed.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
}

/// A generator for `(master, tag, index)` on the given ChaCha stream.
pub fn stream(master: u64, tag: u64, index: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, tag, index));
    rng.set_stream(stream);
    rng
}
