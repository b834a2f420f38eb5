//! Reproducible, splittable random streams.
//!
//! Every replica gets its own ChaCha8 stream whose seed is derived from
//! `(master_seed, tag, index)` by SplitMix64 finalization. Results are
//! therefore independent of how replicas are scheduled across workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Stream tags, one per sampling measure, so the same replica index never
/// reuses a stream across different purposes.
pub mod tag {
    pub const SHUFFLE: u64 = 1;
    pub const UNIFORM: u64 = 2;
    pub const CHAIN: u64 = 3;
    pub const WALK: u64 = 4;
    pub const COUPLING: u64 = 5;
}

/// SplitMix64 finalizer. Bijective on u64, good avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed for replica `index` of stream family `tag`.
pub fn child_seed(master: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(master ^ mix64(tag)) ^ index)
}

/// Deterministic per-replica stream.
pub fn stream(master: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, tag, index))
}

/// Parses a seed given in decimal or 0x-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64> {
    let s = s.trim();
    let parsed = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        s.parse::<u64>()
    };
    parsed.map_err(|_| Error::BadSeed(s.to_string()))
}
