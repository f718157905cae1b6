//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a base seed
//! and a stream label, so paired runs, trials and Monte-Carlo shards never
//! share state and can be replayed from `(seed, label)` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream labels used across the crate.
pub mod stream {
    pub const SPLIT: u64 = 0x5350_4c49_54;
    pub const LABELS: u64 = 0x4c41_4245_4c;
    pub const MIX: u64 = 0x4d49_58;
    pub const INIT: u64 = 0x494e_4954;
    pub const SHUFFLE: u64 = 0x5348_5546;
    pub const DATASET: u64 = 0x4441_5441;
    pub const RISK: u64 = 0x5249_534b;
    pub const TRIAL: u64 = 0x5452_4941_4c;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a base seed with a stream label into an independent seed.
pub fn derive(base: u64, label: u64) -> u64 {
    splitmix64(splitmix64(base) ^ label.rotate_left(17))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(base: u64, label: u64) -> Rng {
    rng(derive(base, label))
}
