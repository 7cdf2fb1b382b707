//! Deterministic random substreams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream whose key
//! is derived from a master seed and a path of indices (replicate number,
//! pipeline stage, ...). A substream therefore depends only on its address,
//! never on which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream addressed by `seed` and `path`.
pub fn substream(seed: u64, path: &[u64]) -> StreamRng {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for (depth, &idx) in path.iter().enumerate() {
        // Fold each component in with its depth so that [1, 0] and [0, 1] differ.
        let mut s = acc ^ idx.rotate_left(17) ^ ((depth as u64 + 1) << 56);
        acc = splitmix64(&mut s) ^ splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    let mut s = acc;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path.len() as u64);
    rng
}
