//! Narrowband complex-baseband physical layer.
//!
//! One complex coefficient per link models propagation; transmit and receive
//! RF chains add their own complex gains. Reciprocity calibration recovers
//! the per-tile chain ratios so uplink pilot estimates can steer a coherent
//! downlink, and the energy helpers turn focused power into harvested energy.

mod beamforming;
mod calibration;
mod channel;
mod wpt;

pub use beamforming::{
    calibrated_weights, coherent_receive_power, conjugate_weights, expected_phase_noise_gain, received_power_w,
    uplink_pilot_estimate,
};
pub use calibration::{reciprocity_calibrate, ReciprocityMeasurement};
pub use channel::{
    channel_gain, dbm_to_w, phase_error_from_clock, wavelength, ChannelModel, PropagationKind,
    RadioChain, SPEED_OF_LIGHT,
};
pub use wpt::{wpt_harvest, Harvest, WptDevice, DEFAULT_ENERGY_TARGET_J};

pub use num_complex::Complex64;

/// Complex narrowband gain (channel, RF chain or precoder weight).
pub type ComplexGain = Complex64;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhyError {
    #[error("transmitter and receiver positions coincide")]
    CoincidentPoints,
    #[error("carrier {0} Hz is outside the supported range")]
    InvalidCarrier(f64),
    #[error("length mismatch: {weights} weights, {channels} channels, {phases} phase errors")]
    DimensionMismatch { weights: usize, channels: usize, phases: usize },
    #[error("weight {0} does not have unit magnitude")]
    UnnormalizedWeight(usize),
    #[error("calibration graph does not reach node {0} from the reference")]
    InsufficientMeasurements(usize),
    #[error("measurement {0} is zero or not finite")]
    ZeroMeasurement(usize),
    #[error("node index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("pilot transmit gain is zero")]
    ZeroPilot,
    #[error("harvested power is zero, the energy target is never reached")]
    ZeroPower,
    #[error("invalid {name}: {value}")]
    InvalidInput { name: &'static str, value: f64 },
}
