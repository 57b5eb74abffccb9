//! Seeded random streams shared by construction and simulation.
//!
//! Every stream is a ChaCha8 generator seeded from a 64-bit value. Per-trial
//! and per-purpose seeds are derived from a master seed with a SplitMix64
//! step over a counter, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in serialized code specs.
pub const RNG_NAME: &str = "chacha8";

pub type CodeRng = ChaCha8Rng;

pub fn from_seed(seed: u64) -> CodeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer applied to `master + counter * golden gamma`.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
