use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::Position;
use crate::netsim::SimTime;

use super::{ComplexGain, PhyError};

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

const MIN_CARRIER_HZ: f64 = 70e6;
const MAX_CARRIER_HZ: f64 = 6e9;

pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PropagationKind {
    FreeSpace,
    /// Power falls as `d^-exponent` beyond the reference distance.
    LogDistance { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub kind: PropagationKind,
    pub carrier_hz: f64,
    pub reference_distance_m: f64,
}

impl ChannelModel {
    pub fn free_space(carrier_hz: f64) -> Self {
        ChannelModel { kind: PropagationKind::FreeSpace, carrier_hz, reference_distance_m: 1.0 }
    }
}

/// SDR front end. Transmit power and carrier range follow the radios
/// installed on the tiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioChain {
    pub tx_gain: ComplexGain,
    pub rx_gain: ComplexGain,
    pub carrier_hz: f64,
    pub max_tx_power_dbm: f64,
}

impl RadioChain {
    pub fn new(tx_gain: ComplexGain, rx_gain: ComplexGain, carrier_hz: f64) -> Result<Self, PhyError> {
        if !(MIN_CARRIER_HZ..=MAX_CARRIER_HZ).contains(&carrier_hz) {
            return Err(PhyError::InvalidCarrier(carrier_hz));
        }
        Ok(RadioChain { tx_gain, rx_gain, carrier_hz, max_tx_power_dbm: 20.0 })
    }

    /// Transmit-over-receive ratio that reciprocity calibration recovers.
    pub fn calibration_coefficient(&self) -> ComplexGain {
        self.tx_gain / self.rx_gain
    }
}

/// Narrowband gain between two points. Depends only on their distance, so
/// it is reciprocal.
pub fn channel_gain(p_tx: &Position, p_rx: &Position, model: &ChannelModel) -> Result<ComplexGain, PhyError> {
    let d = (p_tx - p_rx).norm();
    if d == 0.0 {
        return Err(PhyError::CoincidentPoints);
    }
    if !(model.carrier_hz > 0.0 && model.carrier_hz.is_finite()) {
        return Err(PhyError::InvalidCarrier(model.carrier_hz));
    }
    let lambda = wavelength(model.carrier_hz);
    let magnitude = match model.kind {
        PropagationKind::FreeSpace => lambda / (4.0 * PI * d),
        PropagationKind::LogDistance { exponent } => {
            let d0 = model.reference_distance_m;
            if !(exponent >= 1.0) {
                return Err(PhyError::InvalidInput { name: "exponent", value: exponent });
            }
            if !(d0 > 0.0) {
                return Err(PhyError::InvalidInput { name: "reference_distance_m", value: d0 });
            }
            lambda / (4.0 * PI * d0) * (d0 / d).powf(exponent / 2.0)
        }
    };
    let cycles = (d / lambda).rem_euclid(1.0);
    Ok(ComplexGain::from_polar(magnitude, -2.0 * PI * cycles))
}

/// Carrier phase rotation caused by a timing error `tau`, in `(-pi, pi]`.
///
/// Integer carriers are reduced exactly in integer arithmetic, so whole
/// cycles map to exactly zero.
pub fn phase_error_from_clock(tau: SimTime, carrier_hz: f64) -> Result<f64, PhyError> {
    if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
        return Err(PhyError::InvalidCarrier(carrier_hz));
    }
    const PS_PER_S: i128 = 1_000_000_000_000;
    let frac = if carrier_hz.fract() == 0.0 && carrier_hz < 1e15 {
        let cycles_ps = (carrier_hz as i128 * tau.as_ps() as i128).rem_euclid(PS_PER_S);
        cycles_ps as f64 / PS_PER_S as f64
    } else {
        (carrier_hz * tau.as_secs_f64()).rem_euclid(1.0)
    };
    let wrapped = if frac > 0.5 { frac - 1.0 } else { frac };
    Ok(2.0 * PI * wrapped)
}
