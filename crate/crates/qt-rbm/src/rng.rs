//! Deterministic RNG stream derivation.
//!
//! Every stochastic component draws from a `ChaCha8Rng` derived from the
//! run seed plus a structural path (epoch, batch, sample index, ...), so
//! results are reproducible and independent of execution order or thread
//! count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche, cheap.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a structural path.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = mix(seed);
    for &tag in path {
        state = mix(state ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    state
}

/// Independent RNG stream for a given (seed, path).
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

/// FNV-1a over raw bytes; used to fold data-dependent inputs (e.g. a
/// sample row and its query mask) into a sampler seed without relying on
/// `std` hasher stability.
pub fn hash_bytes(init: u64, bytes: &[u8]) -> u64 {
    let mut h = init ^ 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
