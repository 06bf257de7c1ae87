//! Named, reproducible random streams.
//!
//! Every trial owns three independent streams: `World` drives the ground
//! truth (measurement noise and control error), `Filter` drives particle
//! draws and resampling, and `Control` drives the planner. Streams are
//! ChaCha8 keyed by the experiment seed, with the stream id derived from the
//! trial index and role, so they are portable across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomStream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamRole {
    World = 0,
    Filter = 1,
    Control = 2,
}

const ROLES: u64 = 4;

pub fn rng_stream(seed: u64, trial: u64, role: StreamRole) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(ROLES).wrapping_add(role as u64));
    rng
}

/// The three streams of one trial.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub world: RandomStream,
    pub filter: RandomStream,
    pub control: RandomStream,
}

impl TrialStreams {
    pub fn new(seed: u64, trial: u64) -> Self {
        Self {
            world: rng_stream(seed, trial, StreamRole::World),
            filter: rng_stream(seed, trial, StreamRole::Filter),
            control: rng_stream(seed, trial, StreamRole::Control),
        }
    }
}
