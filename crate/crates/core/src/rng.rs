//! Seed derivation.
//!
//! Every random decision in a run comes from a ChaCha8 stream whose 64-bit
//! seed is derived from the master seed with SplitMix64 finalizers:
//!
//! * construction stream: `mix(seed ^ INIT_DOMAIN)`
//! * stream of node `v` in round `t`: `mix(mix(mix(seed ^ ROUND_DOMAIN) ^ t) ^ v)`
//!
//! and then expanded with `ChaCha8Rng::seed_from_u64`. Node streams are
//! independent of evaluation order, so rounds can be computed in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const INIT_DOMAIN: u64 = 0x1d8e_4e27_c47d_124f;
pub const ROUND_DOMAIN: u64 = 0x9e6c_63d0_676a_9a99;

/// SplitMix64 output function.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn init_stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ INIT_DOMAIN))
}

pub fn node_stream(seed: u64, round: u32, node: usize) -> ChaCha8Rng {
    let round_key = mix(mix(seed ^ ROUND_DOMAIN) ^ round as u64);
    ChaCha8Rng::seed_from_u64(mix(round_key ^ node as u64))
}
