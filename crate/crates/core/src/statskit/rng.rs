//! Seeded random streams shared by every randomized analysis.
//!
//! The generator is ChaCha8 seeded with `seed_from_u64`. A bootstrap
//! resample of `n` items draws `n` indices in order, each as the high 64
//! bits of `next_u64() as u128 * n` (a multiply-shift map without
//! rejection). Replaying that recipe with the same seed reproduces every
//! resample exactly.
//!
//! Analyses that need several independent streams derive them from one
//! top-level seed with [`substream`].

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform index in `0..n` by multiply-shift.
pub fn draw_index(rng: &mut impl RngCore, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Seed for the named child stream of `seed`:
/// `splitmix64(seed ^ fnv1a64(name))`.
pub fn substream(seed: u64, name: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(name.as_bytes()))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// In-place Fisher-Yates shuffle driven by [`draw_index`], walking from the
/// last position down.
pub fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = draw_index(rng, i + 1);
        items.swap(i, j);
    }
}
