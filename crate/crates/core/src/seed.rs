//! Deterministic seed derivation.
//!
//! Every stochastic stage (init, shuffles, folds, synthesis) owns a seed
//! derived from the user seed and a fixed set of tags, so results never depend
//! on evaluation order or thread placement.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a base seed with an arbitrary list of stream tags.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    let mut z = splitmix64(base);
    for &p in parts {
        z = splitmix64(z ^ splitmix64(p));
    }
    z
}

/// ChaCha stream for a derived seed.
pub fn rng(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, parts))
}
