//! Seed derivation for every stochastic stage.
//!
//! A stage seed is `splitmix64(master ^ splitmix64(fnv1a64(stage) ^ index))`.
//! Stage names used by the pipeline are listed in the README so that a run
//! can be reproduced by calling the modules by hand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Derives an independent seed for `stage` / `index` from a master seed.
pub fn derive_seed(master: u64, stage: &str, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a64(stage.as_bytes()) ^ index))
}

/// Deterministic RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
