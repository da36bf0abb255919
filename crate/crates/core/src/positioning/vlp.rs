use std::f64::consts::PI;

use crate::geometry::{Direction, Position};

use super::{trilaterate_ls, PositionEstimate, PositioningError, RangeObservation, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Led {
    pub id: u32,
    pub position: Position,
    pub normal: Direction,
    pub lambertian_order: f64,
    pub power_w: f64,
}

impl Led {
    /// Ceiling LED pointing straight down.
    pub fn downward(id: u32, position: Position, lambertian_order: f64, power_w: f64) -> Self {
        Led { id, position, normal: Direction::new(0.0, 0.0, -1.0), lambertian_order, power_w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VlpReceiver {
    pub position: Position,
    pub normal: Direction,
    pub area_m2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VlpObservation {
    pub led: Led,
    pub power_w: f64,
}

/// Order `m` of a Lambertian emitter with the given half-power semi-angle.
pub fn lambertian_order(half_power_semi_angle_rad: f64) -> f64 {
    -std::f64::consts::LN_2 / half_power_semi_angle_rad.cos().ln()
}

/// Line-of-sight received optical power, W.
pub fn vlp_rss(led: &Led, receiver: &VlpReceiver) -> f64 {
    let to_rx = receiver.position - led.position;
    let d = to_rx.norm();
    let cos_phi = led.normal.normalize().dot(&to_rx) / d;
    let cos_psi = -receiver.normal.normalize().dot(&to_rx) / d;
    if !(cos_phi > 0.0 && cos_psi > 0.0) {
        return 0.0;
    }
    let m = led.lambertian_order;
    led.power_w * (m + 1.0) * receiver.area_m2 / (2.0 * PI * d * d) * cos_phi.powf(m) * cos_psi
}

/// Multilateration from RSS, assuming downward LEDs and an upward receiver
/// at a known height.
pub fn vlp_position(
    obs: &[VlpObservation],
    receiver_height_m: f64,
    receiver_area_m2: f64,
    config: &SolverConfig,
) -> Result<PositionEstimate, PositioningError> {
    if !(receiver_area_m2 > 0.0) {
        return Err(PositioningError::InvalidInput { name: "receiver_area_m2", value: receiver_area_m2 });
    }
    let ranges = obs
        .iter()
        .map(|o| {
            if !(o.power_w > 0.0 && o.power_w.is_finite()) {
                return Err(PositioningError::NegativePower(o.power_w));
            }
            let h = o.led.position.z - receiver_height_m;
            if !(h > 0.0) {
                return Err(PositioningError::InvalidInput { name: "led height above receiver", value: h });
            }
            // P = K h^(m+1) / d^(m+3)
            let m = o.led.lambertian_order;
            let k = o.led.power_w * (m + 1.0) * receiver_area_m2 / (2.0 * PI);
            let d = (k * h.powf(m + 1.0) / o.power_w).powf(1.0 / (m + 3.0));
            Ok(RangeObservation::from_range(o.led.id, o.led.position, d, 0.0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    trilaterate_ls(&ranges, &SolverConfig { known_height: Some(receiver_height_m), ..*config })
}
