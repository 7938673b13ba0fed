//! Seed derivation and stable hashing.
//!
//! Per-item seeds are `splitmix64(base ^ splitmix64(item))`, so any single
//! model, trial or sweep point can be reproduced without replaying the
//! others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(base: u64, item: u64) -> u64 {
    splitmix64(base ^ splitmix64(item))
}

/// Seed mixed with a domain-separation label.
pub fn derive_labeled(base: u64, label: &str, item: u64) -> u64 {
    derive(derive(base, fnv1a(label.as_bytes())), item)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
