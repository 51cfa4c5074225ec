//! Per-trajectory random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Independent generator for trajectory `index` of a run seeded with `seed`.
///
/// The ChaCha key is a hash of `seed` and the 64-bit stream id is `index`, so
/// any trajectory can be replayed alone and distinct indices never share a
/// keystream.
pub fn derive_stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
