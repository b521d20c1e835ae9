//! Seed derivation. Every randomized unit of work gets its own stream
//! derived from `(seed, stream, index)`, so results never depend on how
//! work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(seed) ^ stream) ^ index)
}

pub fn rng(seed: u64, stream: u64, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stream, index))
}

/// Stream identifiers. Kept in one place so no two consumers collide.
pub mod stream {
    pub const DATASET_LAYOUT: u64 = 1;
    pub const DATASET_GRAPH: u64 = 2;
    pub const GNN_INIT: u64 = 3;
    pub const GNN_SHUFFLE: u64 = 4;
    pub const EDGE_MASK: u64 = 5;
    pub const GLG_INIT: u64 = 6;
    pub const GLG_SHUFFLE: u64 = 7;
}
