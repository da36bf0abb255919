use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TileId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLimits {
    /// Per-port PoE budget.
    pub port_cap_w: f64,
    /// Budget of all midspans together.
    pub aggregate_cap_w: f64,
    /// Number of powered devices the midspans support.
    pub port_count_cap: u32,
}

impl Default for PowerLimits {
    fn default() -> Self {
        PowerLimits {
            port_cap_w: 90.0,
            aggregate_cap_w: 9000.0,
            port_count_cap: 156,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerPlan {
    pub draws_w: BTreeMap<TileId, f64>,
    pub limits: PowerLimits,
    pub total_w: f64,
}

impl PowerPlan {
    /// Aggregate budget left unallocated.
    pub fn headroom_w(&self) -> f64 {
        self.limits.aggregate_cap_w - self.total_w
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("draw of {draw_w} W is negative or not finite for {tile}")]
    InvalidDraw { tile: TileId, draw_w: f64 },
    #[error("{ports} powered ports exceed the {cap} port limit")]
    PortCountExceeded { ports: usize, cap: u32 },
    #[error("{tile} draws {draw_w} W, above the {cap_w} W port cap")]
    PortCapExceeded { tile: TileId, draw_w: f64, cap_w: f64 },
    #[error("total draw {total_w} W exceeds the {cap_w} W aggregate budget")]
    AggregateExceeded { total_w: f64, cap_w: f64 },
}

/// Power plan with the same draw on every tile.
pub fn plan_power(
    tiles: impl IntoIterator<Item = TileId>,
    per_tile_draw_w: f64,
    limits: &PowerLimits,
) -> Result<PowerPlan, PowerError> {
    plan_power_draws(tiles.into_iter().map(|t| (t, per_tile_draw_w)), limits)
}

/// Check a set of per-tile draws against the port count, per-port and
/// aggregate limits, in that order.
pub fn plan_power_draws(
    draws: impl IntoIterator<Item = (TileId, f64)>,
    limits: &PowerLimits,
) -> Result<PowerPlan, PowerError> {
    let draws_w: BTreeMap<TileId, f64> = draws.into_iter().collect();
    if draws_w.len() > limits.port_count_cap as usize {
        return Err(PowerError::PortCountExceeded {
            ports: draws_w.len(),
            cap: limits.port_count_cap,
        });
    }
    for (&tile, &draw_w) in &draws_w {
        if !(draw_w >= 0.0 && draw_w.is_finite()) {
            return Err(PowerError::InvalidDraw { tile, draw_w });
        }
        if draw_w > limits.port_cap_w {
            return Err(PowerError::PortCapExceeded { tile, draw_w, cap_w: limits.port_cap_w });
        }
    }
    let total_w: f64 = draws_w.values().sum();
    if total_w > limits.aggregate_cap_w {
        return Err(PowerError::AggregateExceeded { total_w, cap_w: limits.aggregate_cap_w });
    }
    Ok(PowerPlan { draws_w, limits: *limits, total_w })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: u32) -> impl Iterator<Item = TileId> {
        (0..n).map(TileId)
    }

    #[test]
    fn full_port_draw_on_all_tiles_exceeds_aggregate() {
        let err = plan_power(ids(140), 90.0, &PowerLimits::default()).unwrap_err();
        assert_eq!(err, PowerError::AggregateExceeded { total_w: 12_600.0, cap_w: 9_000.0 });
    }

    #[test]
    fn aggregate_boundary_is_inclusive() {
        let plan = plan_power(ids(100), 90.0, &PowerLimits::default()).unwrap();
        assert_eq!(plan.total_w, 9_000.0);
        assert_eq!(plan.headroom_w(), 0.0);
    }

    #[test]
    fn reduced_draw_fits() {
        let plan = plan_power(ids(140), 60.0, &PowerLimits::default()).unwrap();
        assert_eq!(plan.total_w, 8_400.0);
    }

    #[test]
    fn too_many_ports() {
        let err = plan_power(ids(157), 10.0, &PowerLimits::default()).unwrap_err();
        assert_eq!(err, PowerError::PortCountExceeded { ports: 157, cap: 156 });
        assert!(plan_power(ids(156), 10.0, &PowerLimits::default()).is_ok());
    }

    #[test]
    fn port_cap_names_first_tile() {
        let draws = [(TileId(3), 10.0), (TileId(7), 95.0), (TileId(9), 120.0)];
        let err = plan_power_draws(draws, &PowerLimits::default()).unwrap_err();
        assert_eq!(err, PowerError::PortCapExceeded { tile: TileId(7), draw_w: 95.0, cap_w: 90.0 });
    }

    #[test]
    fn negative_draw_rejected() {
        assert!(matches!(
            plan_power(ids(2), -1.0, &PowerLimits::default()),
            Err(PowerError::InvalidDraw { .. })
        ));
    }
}
