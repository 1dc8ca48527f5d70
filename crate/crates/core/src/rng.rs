//! Seed derivation and generator construction.
//!
//! Every random draw in a trial comes from a ChaCha8 stream keyed by a seed
//! derived from `(trial seed, stream tag, index)`. Streams are independent of
//! the order in which they are consumed, so per-slot noise does not depend on
//! which other slots were transmitted first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags used with [`derive_seed`].
pub mod stream {
    pub const TRIAL: u64 = 0x5452_4941;
    pub const CHANNEL: u64 = 0x4348_414e;
    pub const PREDICTOR: u64 = 0x5052_4544;
    pub const PHY: u64 = 0x5048_5953;
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed: `splitmix64(splitmix64(base ^ tag) ^ index)`.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ tag) ^ index)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
