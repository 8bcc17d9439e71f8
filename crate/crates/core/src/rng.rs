//! Counter-based random streams.
//!
//! Every simulation draws from a ChaCha8 stream addressed by `(seed, stream)`.
//! ChaCha is a counter-mode generator, so distinct stream ids give
//! independent sequences without any shared state between callers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id of replicate `replicate` at horizon `n`.
///
/// Packs both values into disjoint halves of the id, so two different
/// `(n, replicate)` pairs never share a stream as long as both fit in 32 bits.
pub fn replicate_stream(n: usize, replicate: usize) -> u64 {
    debug_assert!(n < (1 << 32) && replicate < (1 << 32));
    ((n as u64) << 32) | replicate as u64
}

/// Stream id reserved for auxiliary Monte Carlo draws (centering, projection,
/// constants). The top bit keeps these disjoint from replicate streams.
pub fn auxiliary_stream(purpose: u32, index: usize) -> u64 {
    debug_assert!(purpose < (1 << 31) && index < (1 << 32));
    (1u64 << 63) | ((purpose as u64) << 32) | index as u64
}
