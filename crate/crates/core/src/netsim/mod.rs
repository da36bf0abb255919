//! Deterministic discrete-event engine and Ethernet-like topology emulation.
//!
//! Events are ordered by `(due, sequence)`; the sequence number is the issue
//! order, so equal due times run first-scheduled first. Message transport
//! adds per-direction link delays, Gaussian jitter truncated at zero and
//! switch residence times, and records per-hop ingress/egress stamps for
//! switches that act as transparent clocks.

mod engine;
mod time;
mod topology;
mod transport;

pub use engine::{Engine, Event, TraceHasher};
pub use time::SimTime;
pub use topology::{
    build_topology, Link, LinkTemplate, Node, NodeId, NodeKind, Route, RouteStep, SwitchModel,
    TopologyGraph, TopologyKind,
};
pub use transport::{HopStamp, Network, Transit};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("event due at {due} is before engine time {now}")]
    SchedulePast { due: SimTime, now: SimTime },
    #[error("simulation time overflow")]
    TimeOverflow,
    #[error("topology has no nodes")]
    EmptyTopology,
    #[error("tree and mesh fanout must be at least 1")]
    InvalidFanout,
    #[error("node {0} is unreachable from the root")]
    Disconnected(NodeId),
    #[error("edge references unknown node {0}")]
    UnknownNode(u32),
    #[error("no path from {src} to {dst}")]
    NoPath { src: NodeId, dst: NodeId },
    #[error("link delay must be non-negative")]
    NegativeDelay,
}
