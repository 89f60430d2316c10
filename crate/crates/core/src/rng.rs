//! Seeded RNG streams.
//!
//! Every random decision in the crate draws from a ChaCha stream derived from
//! the run seed and a stream id, so results are reproducible bit for bit and
//! parallel work (one stream per trial) is independent of thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids. Keep them distinct; collisions would correlate streams.
pub mod streams {
    pub const INIT: u64 = 0x01;
    pub const SPLIT: u64 = 0x02;
    /// Epoch `e` uses `EPOCH_BASE + e`.
    pub const EPOCH_BASE: u64 = 0x1000;
    /// Monte Carlo trial `t` uses `TRIAL_BASE + t`.
    pub const TRIAL_BASE: u64 = 0x100_0000;
    /// Auxiliary world/battery construction.
    pub const WORLD_BASE: u64 = 0x2000_0000;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic RNG for `(seed, stream)`. Distinct streams decorrelate by
/// hashing before keying ChaCha.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}
