//! Seed derivation.
//!
//! Every random quantity in the crate is drawn from a stream whose seed is a
//! hash of a master seed and a tuple of indices (node, replicate, iteration,
//! ...). Results therefore never depend on scheduling or thread count.

use rand::SeedableRng;

/// Generator used for every simulation stream.
pub type SimRng = rand_pcg::Pcg64Mcg;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a master seed together with a sequence of indices.
#[inline]
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(master), |acc, &p| {
        splitmix(acc ^ splitmix(p.wrapping_add(GOLDEN)))
    })
}

/// Generator for the stream `hash(master, parts...)`.
#[inline]
pub fn stream(master: u64, parts: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, parts))
}
