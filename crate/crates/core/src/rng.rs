//! Named random streams.
//!
//! Every consumer of randomness draws from its own stream so that enabling or
//! disabling one feature leaves the sequences seen by the others untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Bernoulli draws deciding surrogate vs exact master.
    Gate = 1,
    /// Action sampling during surrogate rollouts.
    Policy = 2,
    /// Weighted selection among rollouts.
    Selection = 3,
    /// Instance and data generation.
    Data = 4,
    /// Network initialisation and minibatch shuffling during training.
    Training = 5,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Independent generator for item `index` of a stream, e.g. one episode.
pub fn substream(seed: u64, which: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index.wrapping_add(0x9e37))));
    rng.set_stream(which as u64 + 64);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
