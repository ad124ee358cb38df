//! Per-run random streams.
//!
//! Every run derives all of its randomness from one seed. Independent
//! consumers (the physical environment, the agent, weight init, evaluation)
//! get disjoint ChaCha streams so that, for a fixed seed, the energy and
//! channel realization does not depend on which policy is being run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

pub const STREAM_ENV: u64 = 1;
pub const STREAM_AGENT: u64 = 2;
pub const STREAM_INIT: u64 = 3;
pub const STREAM_EVAL: u64 = 4;

pub fn stream_rng(seed: u64, stream: u64) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
