//! Counter-based random streams.
//!
//! Every random draw in the pipeline comes from a ChaCha8 stream keyed by
//! `(master seed, purpose, parent, sample)`. Streams are derived, never
//! shared, so a sample's value does not depend on which worker produced it or
//! in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Distinguishes the independent consumers of a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Generation = 1,
    Smote = 2,
    Dataset = 3,
    Rotation = 4,
    Noise = 5,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 256-bit key for the stream `(seed, purpose, a, b)`.
fn stream_key(seed: u64, purpose: Purpose, a: u64, b: u64) -> [u8; 32] {
    let mut h = splitmix64(seed ^ (purpose as u64).rotate_left(56));
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        let word = match i {
            0 => a,
            1 => b,
            2 => a.rotate_left(32) ^ b,
            _ => seed,
        };
        h = splitmix64(h ^ word);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    key
}

/// Independent generator for `(seed, purpose, a, b)`.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_key(seed, purpose, a, b))
}
