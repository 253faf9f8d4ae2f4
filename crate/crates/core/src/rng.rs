//! Seeded random streams.
//!
//! Every parallel task draws from its own ChaCha8 stream keyed by
//! `(root seed, stream id)`, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a stream id from a tag and an index so unrelated routines sharing
/// one root seed do not reuse streams.
pub fn stream_id(tag: &str, index: u64) -> u64 {
    // FNV-1a over the tag, then mix in the index.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn uniform_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}
