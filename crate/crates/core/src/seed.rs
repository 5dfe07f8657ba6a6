//! Deterministic derivation of independent random streams.
//!
//! Every stream is a ChaCha8 generator seeded from a base seed mixed with a
//! string key (a target word, an instance id, a restart index). The mixing is
//! a fixed function, so a stream depends only on `(base, key)` and never on
//! processing order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Stable across platforms and toolchains, unlike `DefaultHasher`.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed of `base` for the stream named `key`.
pub fn derive(base: u64, key: &str) -> u64 {
    splitmix64(splitmix64(base) ^ fnv1a(key.as_bytes()))
}

/// Generator for the stream named `key` under `base`.
pub fn stream(base: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, key))
}
