//! Seed derivation for reproducible sub-streams.
//!
//! A master seed deterministically fans out into independent streams (one per
//! pipeline phase, ensemble member, or repeated run), so results do not depend
//! on scheduling or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keeping the derived streams of different consumers disjoint.
pub(crate) mod domain {
    pub const SELECT: u64 = 0x01;
    pub const INDEX: u64 = 0x02;
    pub const DISCRETIZE: u64 = 0x03;
    pub const MEMBER: u64 = 0x10_0000;
    pub const MEMBER_K: u64 = 0x11_0000;
    pub const CONSENSUS: u64 = 0x12_0000;
    pub const RUN: u64 = 0x20_0000;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a stream tag. Stable across
/// platforms and releases; changing it would silently change every result.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Seeded RNG used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of repeated run `run` under a master seed. Run 0 is the master seed
/// itself, so a single run and a one-run repeat are identical.
pub fn run_seed(master: u64, run: usize) -> u64 {
    if run == 0 {
        master
    } else {
        derive_seed(master, domain::RUN + run as u64)
    }
}
