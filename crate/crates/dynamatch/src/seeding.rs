//! Deterministic seed derivation and subset sampling.
//!
//! Every randomized component in this crate is driven by a caller-supplied
//! `u64` master seed. Sub-seeds for independent components (one sketch, one
//! trial, one party) are derived with a counter-based split so that results
//! are reproducible bit-for-bit regardless of evaluation order, platform, or
//! how many other components exist.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 output mixing. Stable across releases: derived seeds are part
/// of the reproducibility contract (CSV reports record them for replay).
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from `(master, tag, index)`.
///
/// `tag` namespaces the consumer (one constant per component kind), `index`
/// enumerates instances within that namespace. Two distinct `(tag, index)`
/// pairs give streams that are independent for all practical purposes.
#[inline]
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ tag.rotate_left(24)) ^ index)
}

/// Seeded RNG used everywhere randomness is needed. ChaCha8 keeps the stream
/// identical across platforms and crate versions.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Uniform random ordered `min(k, n)`-arrangement of `0..n` (distinct values,
/// draw order preserved). Partial Fisher-Yates.
pub fn sample_arrangement(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = k.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Uniform random `min(k, n)`-subset of `0..n`, returned sorted ascending.
///
/// The value set of a uniform k-arrangement is a uniform k-subset.
pub fn sample_subset(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut s = sample_arrangement(n, k, rng);
    s.sort_unstable();
    s
}
