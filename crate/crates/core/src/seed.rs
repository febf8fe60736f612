//! Seed derivation. Every stochastic stage owns a generator seeded from a
//! stable hash of its parent seed and a stream index, so results do not
//! depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SceneRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `mix64(mix64(master) + golden·(index + 1))`. Stable across releases;
/// changing it changes every generated dataset.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1))))
}

pub fn rng_from_seed(seed: u64) -> SceneRng {
    SceneRng::seed_from_u64(seed)
}
