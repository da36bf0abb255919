//! Indoor positioning: forward models and estimators.
//!
//! Acoustic and RF beacons are ranged by time of arrival, LEDs by received
//! signal strength. All estimators end in the same damped Gauss-Newton
//! solver over range residuals.

mod eval;
mod ransac;
mod solve;
mod toa;
mod vlp;

pub use eval::{evaluate_scenario, evaluate_vlp, ErrorStats, Estimator, EvalSetup};
pub use ransac::{ransac_trilaterate, RansacConfig};
pub use solve::{trilaterate_hybrid, trilaterate_ls, SolverConfig};
pub use toa::{simulate_toa, ToaNoise};
pub use vlp::{lambertian_order, vlp_position, vlp_rss, Led, VlpObservation, VlpReceiver};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Position;
use crate::phy::SPEED_OF_LIGHT;

/// Speed of sound in air at 20 °C.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Usable acoustic band of the ultrasonic/audio beacons, in Hz.
pub const ACOUSTIC_BAND_HZ: (f64, f64) = (20.0, 45_000.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Technology {
    Acoustic,
    Rf,
    Vlp { lambertian_order: f64, power_w: f64 },
}

impl Technology {
    /// Propagation speed used to turn a TOA into a range.
    pub fn speed(&self) -> f64 {
        match self {
            Technology::Acoustic => SPEED_OF_SOUND,
            Technology::Rf | Technology::Vlp { .. } => SPEED_OF_LIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beacon {
    pub id: u32,
    pub position: Position,
    pub technology: Technology,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeObservation {
    pub beacon: u32,
    pub anchor: Position,
    pub toa_s: f64,
    /// `speed * toa`; includes any device clock bias.
    pub range_m: f64,
    pub speed_m_s: f64,
    pub sigma_m: f64,
    /// Injected NLOS excess path. Simulation truth, never read by estimators.
    pub nlos_bias_m: f64,
}

impl RangeObservation {
    /// Observation with a directly measured range and no timing information.
    pub fn from_range(beacon: u32, anchor: Position, range_m: f64, sigma_m: f64) -> Self {
        RangeObservation {
            beacon,
            anchor,
            toa_s: range_m / SPEED_OF_SOUND,
            range_m,
            speed_m_s: SPEED_OF_SOUND,
            sigma_m,
            nlos_bias_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionEstimate {
    pub position: Position,
    pub residual_rms_m: f64,
    pub iterations: usize,
    /// Indices into the observation slice that support the estimate.
    pub inliers: Vec<usize>,
    pub clock_bias_s: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PositioningError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("anchor geometry is degenerate")]
    DegenerateGeometry,
    #[error("solver did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("device clock bias is not observable from these anchors")]
    UnobservableBias,
    #[error("no sample reached {0} inliers")]
    NoConsensus(usize),
    #[error("received power {0} W cannot be inverted to a distance")]
    NegativePower(f64),
    #[error("invalid {name}: {value}")]
    InvalidInput { name: &'static str, value: f64 },
}
