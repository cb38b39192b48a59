//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`)
//! seeded with `seed_from_u64(seed)` and switched to a numbered stream.
//! Independent consumers (task generation, outcome sampling, fold splits)
//! use distinct stream numbers so they never share state, and results are
//! identical across platforms for a given seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
