//! Clock models and the three synchronization tiers.
//!
//! - message-based two-way exchange with transparent and boundary clocks
//! - the same exchange with syntonization and known link asymmetry removed
//! - a dedicated reference that pins every clock once per PPS edge

mod clock;
mod exchange;
mod servo;
pub mod sim;

pub use clock::{dedicated_reference, LocalClock, SyncMode};
pub use exchange::{
    asymmetry_correct, boundary_relay, estimate_skew, transparent_correction, two_way_exchange,
    BoundaryClock, ExchangeEstimate, PathDirection, SyncReceipt, SyncSession,
};
pub use servo::{servo_step, PiServo, ServoConfig};

use thiserror::Error;

use crate::netsim::{NetError, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeSyncError {
    #[error("clock skew {0} is outside (-1e-3, 1e-3)")]
    SkewOutOfRange(f64),
    #[error("session {master} -> {slave} is missing timestamp t{missing}")]
    IncompleteSession { master: NodeId, slave: NodeId, missing: u8 },
    #[error("hop at {0} carries no transparent-clock timestamps")]
    MissingTimestamps(NodeId),
    #[error("boundary clock {0} is not synchronized upstream")]
    NotSynchronized(NodeId),
    #[error("successive sync messages share the same master timestamp")]
    ZeroInterval,
    #[error("offset estimate is not finite")]
    NonFiniteEstimate,
    #[error(transparent)]
    Net(#[from] NetError),
}
