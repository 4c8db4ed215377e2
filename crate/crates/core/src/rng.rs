//! Reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// A `(seed, stream_id)` pair that fully determines a random sequence.
///
/// Streams sharing a seed but differing in `stream_id` are disjoint ChaCha
/// streams, so replicas can be assigned `replica(k)` without coordination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream for the `k`-th replica of an experiment.
    pub fn replica(&self, k: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(k),
        }
    }

    /// An unrelated seed for a sub-experiment identified by `tag`.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x5eed))),
            stream_id: self.stream_id,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
