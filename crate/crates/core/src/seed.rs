//! Seed derivation for the nested deterministic RNG streams.
//!
//! Every randomized stage (subset draw, initial labels, per-round training,
//! per-round random selection) gets its own seed derived from the trial seed
//! and a stage tag, so adding or reordering stages never perturbs the others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_TRIAL: u64 = 0x7261_6c69;
pub const TAG_SUBSET: u64 = 0x7375_6273;
pub const TAG_INIT_LABELS: u64 = 0x696e_6974;
pub const TAG_TRAIN: u64 = 0x7472_6169;
pub const TAG_SELECT: u64 = 0x7365_6c65;
pub const TAG_SYNTH_TEST: u64 = 0x7465_7374;

/// SplitMix64 finalizer; full avalanche, so nearby seeds give unrelated streams.
pub fn mix(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix3(base: u64, tag: u64, index: u64) -> u64 {
    mix(mix(base, tag), index)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
