use super::{Point2, RoverConfig, RoverError};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub waypoints: Vec<Point2>,
    /// Lift heights measured at every waypoint.
    pub heights: Vec<f64>,
    pub drive_distance_m: f64,
    pub energy_wh: f64,
}

const GRID_EPS: f64 = 1e-9;

/// Serpentine coverage of `[0, length] x [0, width]`, rows along `x`.
pub fn plan_grid(
    length_m: f64,
    width_m: f64,
    spacing_m: f64,
    heights: &[f64],
    config: &RoverConfig,
) -> Result<SamplePlan, RoverError> {
    if !(spacing_m > 0.0 && spacing_m.is_finite()) {
        return Err(RoverError::InvalidInput { name: "spacing_m", value: spacing_m });
    }
    for (name, v) in [("length_m", length_m), ("width_m", width_m)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(RoverError::InvalidInput { name, value: v });
        }
    }
    if heights.is_empty() {
        return Err(RoverError::EmptyPlan);
    }
    if let Some(&h) = heights.iter().find(|&&h| !(config.lift_min_m..=config.lift_max_m).contains(&h)) {
        return Err(RoverError::HeightOutOfRange(h));
    }
    let nx = (length_m / spacing_m + GRID_EPS).floor() as usize + 1;
    let ny = (width_m / spacing_m + GRID_EPS).floor() as usize + 1;
    let mut waypoints = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        let y = row as f64 * spacing_m;
        for k in 0..nx {
            let col = if row % 2 == 0 { k } else { nx - 1 - k };
            waypoints.push(Point2::new(col as f64 * spacing_m, y));
        }
    }
    let drive_distance_m = path_length(&waypoints);
    Ok(SamplePlan {
        energy_wh: drive_energy_wh(drive_distance_m, config),
        waypoints,
        heights: heights.to_vec(),
        drive_distance_m,
    })
}

pub(crate) fn path_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Quantized reading of the ranging sensor, `None` outside its range.
/// Rounds to the nearest step, ties toward zero.
pub fn sense_obstacle(true_distance_m: f64, config: &RoverConfig) -> Option<f64> {
    if !(config.sensor_min_m..=config.sensor_max_m).contains(&true_distance_m) {
        return None;
    }
    let res = config.sensor_resolution_m;
    let steps = (true_distance_m / res - 0.5).ceil();
    Some(steps * res)
}

pub fn drive_energy_wh(distance_m: f64, config: &RoverConfig) -> f64 {
    config.drive_power_w * (distance_m / config.speed_m_s) / 3600.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyUse {
    pub used_wh: f64,
    pub remaining_wh: f64,
}

pub fn energy_feasible(distance_m: f64, config: &RoverConfig) -> Result<EnergyUse, RoverError> {
    if !(config.drive_power_w > 0.0) {
        return Err(RoverError::InvalidInput { name: "drive_power_w", value: config.drive_power_w });
    }
    if !(config.speed_m_s > 0.0) {
        return Err(RoverError::InvalidInput { name: "speed_m_s", value: config.speed_m_s });
    }
    let used_wh = drive_energy_wh(distance_m, config);
    if used_wh > config.battery_wh {
        return Err(RoverError::InsufficientBattery {
            required_wh: used_wh,
            capacity_wh: config.battery_wh,
            shortfall_wh: used_wh - config.battery_wh,
        });
    }
    Ok(EnergyUse { used_wh, remaining_wh: config.battery_wh - used_wh })
}
