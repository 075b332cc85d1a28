//! Counter-based random streams.
//!
//! Sample `i` of a campaign always draws from stream `i` of a ChaCha8
//! generator keyed by the campaign seed, so results do not depend on how
//! samples are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream for a named sub-campaign, so that two experiments sharing a
/// seed do not reuse the same trajectories.
pub fn substream(seed: u64, domain: u64, index: u64) -> SimRng {
    stream(splitmix64(seed ^ splitmix64(domain)), index)
}

/// Sub-campaign tags for [`substream`].
pub mod domain {
    pub const ONE_INTERVAL: u64 = 1;
    pub const TWO_INTERVAL: u64 = 2;
    pub const HIT_MATRIX: u64 = 3;
    pub const NEAR_MISS: u64 = 4;
    pub const SCALING: u64 = 5;
    pub const KOEBE: u64 = 6;
    pub const HARMONIC: u64 = 7;
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
