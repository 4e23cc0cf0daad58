//! Seeded random streams.
//!
//! Every independent unit of work (a sampled bracket, one config in one rung, one
//! particle in one iteration) draws from its own ChaCha stream, so results do not
//! depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const TAG_SAMPLE: u64 = 1;
pub(crate) const TAG_MUTATE: u64 = 2;
pub(crate) const TAG_PSO_INIT: u64 = 3;
pub(crate) const TAG_PSO_STEP: u64 = 4;
pub(crate) const TAG_SYNTH: u64 = 5;
pub(crate) const TAG_GBO_INIT: u64 = 6;

/// Packs `(tag, a, b, c)` into a stream id: 8 bits tag, 12 bits each for `a` and
/// `b`, 32 bits for `c`.
pub(crate) fn stream_key(tag: u64, a: u64, b: u64, c: u64) -> u64 {
    debug_assert!(a < (1 << 12) && b < (1 << 12) && c < (1 << 32));
    (tag << 56) | ((a & 0xfff) << 44) | ((b & 0xfff) << 32) | (c & 0xffff_ffff)
}

pub(crate) fn stream(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}
