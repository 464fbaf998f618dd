//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`Stream`] derived from a
//! master seed and a list of integer tags (replication index, sample size,
//! path number, ...). Two different tag lists give statistically independent
//! streams, and the derivation does not depend on the order in which streams
//! are created, so work can be spread over threads without changing results.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Stream = Xoshiro256PlusPlus;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a tag path into a 64-bit sub-seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x2545_F491_4F6C_DD1D)));
    }
    h
}

pub fn stream(master: u64, tags: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(master, tags))
}
