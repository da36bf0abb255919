//! Sampling rover: coverage plans, obstacle routing, ranging sensor and
//! battery budget.
//!
//! Planning happens in the floor plane. Waypoints are `(x, y)` in meters;
//! the scissor lift then visits every configured height at each waypoint.

mod plan;
mod route;

pub use plan::{drive_energy_wh, energy_feasible, plan_grid, sense_obstacle, EnergyUse, SamplePlan};
pub use route::{route_avoiding, Obstacle, RoutedPlan, GRID_CELL_M};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point2 = Vector2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoverConfig {
    pub lift_min_m: f64,
    pub lift_max_m: f64,
    pub sensor_min_m: f64,
    pub sensor_max_m: f64,
    pub sensor_resolution_m: f64,
    pub localization_precision_m: f64,
    pub battery_wh: f64,
    /// Square-ish footprint `[x, y]`.
    pub footprint_m: [f64; 2],
    pub drive_power_w: f64,
    pub speed_m_s: f64,
}

impl Default for RoverConfig {
    fn default() -> Self {
        RoverConfig {
            lift_min_m: 0.55,
            lift_max_m: 1.85,
            sensor_min_m: 0.02,
            sensor_max_m: 4.00,
            sensor_resolution_m: 0.003,
            localization_precision_m: 0.02,
            battery_wh: 170.0,
            footprint_m: [0.5, 0.5],
            drive_power_w: 50.0,
            speed_m_s: 0.5,
        }
    }
}

impl RoverConfig {
    /// Clearance kept from every obstacle box in each axis.
    pub fn inflation_m(&self) -> [f64; 2] {
        [
            self.footprint_m[0] / 2.0 + self.localization_precision_m,
            self.footprint_m[1] / 2.0 + self.localization_precision_m,
        ]
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoverError {
    #[error("height {0} m is outside the lift range")]
    HeightOutOfRange(f64),
    #[error("plan has no waypoints or no heights")]
    EmptyPlan,
    #[error("invalid {name}: {value}")]
    InvalidInput { name: &'static str, value: f64 },
    #[error("start waypoint ({0}, {1}) lies inside an inflated obstacle")]
    StartBlocked(f64, f64),
    #[error("plan needs {required_wh:.3} Wh, battery holds {capacity_wh:.3} Wh ({shortfall_wh:.3} Wh short)")]
    InsufficientBattery { required_wh: f64, capacity_wh: f64, shortfall_wh: f64 },
}
