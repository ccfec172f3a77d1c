//! Seeded pseudo-random streams.
//!
//! Every random decision in the library (splits, folds, random codes, code
//! columns) draws from a xoshiro256** generator whose 256-bit state is
//! expanded from a 64-bit seed with SplitMix64, so results depend only on the
//! seed and not on the platform or execution order.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256StarStar};

pub type Prng = Xoshiro256StarStar;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn seeded(seed: u64) -> Prng {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// Derives an independent child seed from `(parent, index)`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let start = parent.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    SplitMix64::seed_from_u64(start).next_u64()
}
