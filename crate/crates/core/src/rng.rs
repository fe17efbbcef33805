//! Counter-based seed derivation: task `i` of a run seeded with `s` always
//! draws from stream `i` of the ChaCha generator keyed by `s`, whatever thread
//! picks it up.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
