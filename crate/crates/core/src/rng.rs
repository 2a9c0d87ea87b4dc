//! Counter-based random streams keyed by `(seed, stream)`.
//!
//! Each Monte-Carlo trial or sample block draws from its own stream so results
//! are independent of the worker count and of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
