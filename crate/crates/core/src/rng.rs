//! Counter-based seed derivation.
//!
//! Every trial owns its own generator, seeded from `(master, index)` by a
//! pure mixing function. Results therefore depend only on the master seed
//! and the trial index, never on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of substream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let a = mix64(master.wrapping_add(0x9E37_79B9_7F4A_7C15));
    mix64(a ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(0x632B_E59B_D9B4_E019))
}

/// Derive a seed from a path of indices, e.g. `(sweep, row, column, role)`.
pub fn derive_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |seed, &i| derive_seed(seed, i))
}

pub fn stream(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}
