//! Seed discipline.
//!
//! Every random stream is a ChaCha8 generator seeded with a 64-bit value.
//! Sub-streams are derived from a master seed and a textual label as the
//! first eight bytes (little-endian) of `SHA-256(master_le_bytes || label)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
