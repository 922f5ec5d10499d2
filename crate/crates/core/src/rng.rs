//! Counter-keyed random streams.
//!
//! Every Monte Carlo trial draws from its own ChaCha stream selected by
//! `(seed, index)`, so results do not depend on scheduling or trial order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream for trial `index` under master `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive a sub-seed for a named experiment component so that two components
/// sharing a master seed still draw disjoint streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
