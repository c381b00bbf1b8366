//! Deterministic seed schedule.
//!
//! Replication `i` of a run with base seed `b` uses seed `b + i`; each random
//! component within a replication draws from its own stream derived from that
//! seed, so adding or reordering layers never shifts another layer's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(base: u64, rep: u64) -> u64 {
    base.wrapping_add(rep)
}

/// Seed for the `stream`-th independent component derived from `seed`.
pub fn substream_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x5EED)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
