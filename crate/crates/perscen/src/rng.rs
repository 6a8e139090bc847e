//! Deterministic random streams.
//!
//! All randomness in a run flows from one master seed.  Each consumer
//! (parameter init, negative sampling, data synthesis, ...) derives its own
//! named substream so that adding or reordering consumers never perturbs the
//! others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// FNV-1a over the substream name, mixed into the master seed.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// splitmix64 finalizer; spreads low-entropy seeds over the whole state space.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// A named deterministic substream of the master seed.
pub fn substream(seed: u64, name: &str) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix(seed ^ fnv1a(name.as_bytes())))
}
