use serde::{Deserialize, Serialize};

use crate::geometry::Position;

use super::PhyError;

/// Energy a small sensor needs per duty cycle.
pub const DEFAULT_ENERGY_TARGET_J: f64 = 362.45e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WptDevice {
    pub position: Position,
    /// RF-to-DC conversion efficiency in `[0, 1]`.
    pub efficiency: f64,
    pub energy_target_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harvest {
    pub energy_j: f64,
    pub time_to_target_s: f64,
}

pub fn wpt_harvest(
    received_power_w: f64,
    duration_s: f64,
    efficiency: f64,
    target_j: f64,
) -> Result<Harvest, PhyError> {
    if !(received_power_w >= 0.0 && received_power_w.is_finite()) {
        return Err(PhyError::InvalidInput { name: "received_power_w", value: received_power_w });
    }
    if !(duration_s >= 0.0) {
        return Err(PhyError::InvalidInput { name: "duration_s", value: duration_s });
    }
    if !(0.0..=1.0).contains(&efficiency) {
        return Err(PhyError::InvalidInput { name: "efficiency", value: efficiency });
    }
    if !(target_j >= 0.0) {
        return Err(PhyError::InvalidInput { name: "target_j", value: target_j });
    }
    let dc = efficiency * received_power_w;
    if dc == 0.0 && target_j > 0.0 {
        return Err(PhyError::ZeroPower);
    }
    let time_to_target_s = if target_j == 0.0 { 0.0 } else { target_j / dc };
    Ok(Harvest { energy_j: dc * duration_s, time_to_target_s })
}
