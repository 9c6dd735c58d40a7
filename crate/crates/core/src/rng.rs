//! Seeded random streams.
//!
//! Replication `r` of a study draws its interarrival variates from ChaCha
//! stream `2r` and its service variates from stream `2r + 1`, both keyed by
//! the base seed. Algorithm variants run on the same replication index see
//! identical `(U, V)` sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CRITICAL_VALUE_DOMAIN: u64 = 0x6372_6974_7661_6c73;

/// Independent interarrival (`U`) and service (`V`) generators.
#[derive(Debug, Clone)]
pub struct QueueStreams {
    pub arrivals: ChaCha8Rng,
    pub services: ChaCha8Rng,
}

impl QueueStreams {
    pub fn for_replication(base_seed: u64, replication: u64) -> Self {
        Self {
            arrivals: substream(base_seed, 2 * replication),
            services: substream(base_seed, 2 * replication + 1),
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::for_replication(seed, 0)
    }
}

/// A generator keyed by `(seed, stream)`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for Brownian path `replication` of a critical-value simulation.
pub fn critical_value_stream(seed: u64, replication: u64) -> ChaCha8Rng {
    substream(seed ^ CRITICAL_VALUE_DOMAIN, replication)
}
