//! Deterministic seeded randomness.
//!
//! A 64-bit master seed splits into named streams by stable string-keyed
//! derivation, and each stream yields counter-indexed sample RNGs. Adding a
//! new experiment never perturbs existing streams, and samples may be drawn
//! in parallel with results identical to sequential execution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// A named, counter-addressable source of independent RNGs.
#[derive(Debug, Clone)]
pub struct SeedStream {
    key: [u8; 32],
}

impl SeedStream {
    /// Derives the stream for `key` (e.g. `"decomp/0"`) under `master`.
    pub fn new(master: u64, key: &str) -> Self {
        let mut h = Sha256::new();
        h.update(master.to_le_bytes());
        h.update([0x1f]);
        h.update(key.as_bytes());
        SeedStream { key: h.finalize().into() }
    }

    /// Child stream under an extra name component.
    pub fn child(&self, key: &str) -> Self {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update([0x1f]);
        h.update(key.as_bytes());
        SeedStream { key: h.finalize().into() }
    }

    /// RNG for sample `index`; identical across runs and thread schedules.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update(index.to_le_bytes());
        let seed: [u8; 32] = h.finalize().into();
        ChaCha8Rng::from_seed(seed)
    }
}
