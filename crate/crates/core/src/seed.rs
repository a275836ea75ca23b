//! Seed derivation. Every random stream in a run is keyed by the master
//! seed, a component label and a list of indices:
//!
//! `seed = u64::from_le_bytes(SHA-256(master_le || label || 0x00 || idx_le...)[0..8])`
//!
//! so any sub-result can be re-derived without replaying the streams that
//! precede it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(master: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    h.update([0u8]);
    for i in indices {
        h.update(i.to_le_bytes());
    }
    let digest = h.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, label: &str, indices: &[u64]) -> ChaCha8Rng {
    rng_from_seed(derive_seed(master, label, indices))
}
