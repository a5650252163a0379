//! Seed derivation.
//!
//! Every random stream in the crate is obtained from a single master seed by
//! folding a list of integer tags through SplitMix64:
//! `derive(seed, &[t0, t1, ..]) = mix(..mix(mix(seed) ^ t0) ^ t1 ..)`.
//! Sweeps use tags `(direction index, k, l)` for the probe `(k, l)` stream,
//! which then yields all runs for that probe in order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix(seed), |acc, &t| splitmix(acc ^ splitmix(t)))
}

pub fn rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tags))
}
