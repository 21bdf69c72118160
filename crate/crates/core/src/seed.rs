//! Deterministic RNG stream derivation.
//!
//! Every random draw in the crate comes from a ChaCha stream whose 256-bit
//! seed encodes (base seed, stream index, domain tag), so any substream is a
//! pure function of those values and cannot be perturbed by evaluation order
//! or worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep unrelated substreams disjoint even for equal indices.
pub mod tag {
    pub const MINIBATCH: u64 = 0x4d42_4154_4348_0001;
    pub const EPOCH_PERMUTATION: u64 = 0x4550_4f43_4800_0002;
    pub const NOISE: u64 = 0x4e4f_4953_4500_0003;
    pub const TEST: u64 = 0x5445_5354_0000_0004;
}

/// RNG for substream `index` of domain `tag` under `seed`.
pub fn stream_rng(seed: u64, index: u64, tag: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&index.to_le_bytes());
    bytes[16..24].copy_from_slice(&tag.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// Collapses several seed components into one, for deriving per-cell seeds.
pub fn mix(parts: &[u64]) -> u64 {
    // splitmix64 absorption; fixed constants from the reference sequence.
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        state = state.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        state = z ^ (z >> 31);
    }
    state
}
