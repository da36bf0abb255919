//! Deterministic simulator and experiment orchestrator for a tile-based
//! distributed wireless facility.
//!
//! The crate is split along the physical and logical layers of the facility:
//!
//! - [`facility`]: room geometry, tile and mount grids, power budget, DAQ model
//! - [`netsim`]: discrete-event engine and Ethernet-like topology emulation
//! - [`timesync`]: clock models and the message-based, syntonized and dedicated
//!   synchronization tiers
//! - [`phy`]: narrowband channels, reciprocity calibration, coherent
//!   beamforming and energy accounting for wireless power transfer
//! - [`positioning`]: TOA / hybrid / RANSAC trilateration and visible-light RSS
//! - [`rover`]: automated sampling plans, obstacle routing and battery checks
//! - [`orchestrator`]: scenario files, experiment runs, sweeps and metric output
//!
//! All randomness is derived from explicit seeds through [`rng`], so a run is a
//! pure function of its scenario and seed.

pub mod facility;
pub mod geometry;
pub mod netsim;
pub mod orchestrator;
pub mod phy;
pub mod positioning;
pub mod rng;
pub mod rover;
pub mod stats;
pub mod timesync;

pub use geometry::Position;
pub use netsim::SimTime;
