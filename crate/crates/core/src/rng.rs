//! Seeded randomness.
//!
//! All sampling uses ChaCha8 (`rand_chacha`), a portable stream cipher
//! generator whose output is identical on every platform. Child seeds are
//! derived with the SplitMix64 finalizer so that a task's stream depends only
//! on its parent seed and its own id, never on scheduling order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes `(parent, id)` into a child seed.
pub fn derive_seed(parent: u64, id: u64) -> u64 {
    let mut z = parent ^ id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
