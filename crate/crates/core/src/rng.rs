//! Seeded random streams.
//!
//! Every random draw in a run comes from a ChaCha stream keyed by the run seed
//! and a stable stream id. Node-owned randomness uses the node id as stream id,
//! so results do not depend on iteration order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SimRng = ChaCha8Rng;

/// Stream ids at or above this value are reserved for non-node purposes.
pub const PURPOSE_BASE: u64 = 1 << 40;

pub const STREAM_CLOCK_INIT: u64 = PURPOSE_BASE + 1;
pub const STREAM_PHY: u64 = PURPOSE_BASE + 2;
pub const STREAM_POSITIONING: u64 = PURPOSE_BASE + 3;
pub const STREAM_RANSAC: u64 = PURPOSE_BASE + 4;
pub const STREAM_ROVER: u64 = PURPOSE_BASE + 5;
pub const STREAM_CHAINS: u64 = PURPOSE_BASE + 6;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream for a node-owned random process.
pub fn node_stream(seed: u64, node: u32) -> SimRng {
    stream(seed, node as u64)
}

/// Stream for evaluation item `index` (one per device position, trial, ...).
pub fn item_stream(seed: u64, index: u64) -> SimRng {
    stream(seed, (1 << 42) + index)
}

/// Stream for the clock owned by `node`, separate from its network stream.
pub fn clock_stream(seed: u64, node: u32) -> SimRng {
    stream(seed, (1 << 41) + node as u64)
}

/// One standard normal draw. Always consumes the generator, so scaling by a
/// zero sigma leaves downstream draws unchanged.
pub fn std_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Gaussian draw `N(mean, sigma^2)`.
pub fn normal<R: rand::Rng + ?Sized>(rng: &mut R, mean: f64, sigma: f64) -> f64 {
    mean + sigma * std_normal(rng)
}
