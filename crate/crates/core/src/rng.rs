//! Seed derivation. Every random stream descends from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// `SHA-256(master ∥ len(label) ∥ label ∥ index)`.
pub fn derive_seed(master: u64, label: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_be_bytes());
    h.update((label.len() as u64).to_be_bytes());
    h.update(label.as_bytes());
    h.update(index.to_be_bytes());
    h.finalize().into()
}

pub fn derive_rng(master: u64, label: &str, index: u64) -> SimRng {
    SimRng::from_seed(derive_seed(master, label, index))
}
