use std::collections::BTreeMap;

use rand::Rng;

use crate::geometry::Position;
use crate::rng::std_normal;

use super::{Beacon, RangeObservation};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToaNoise {
    /// Standard deviation of the timing error, seconds.
    pub sigma_s: f64,
    /// Common device clock bias added to every TOA, seconds.
    pub clock_bias_s: f64,
    /// Excess path length per beacon id, meters.
    pub nlos_bias_m: BTreeMap<u32, f64>,
}

/// Forward TOA model. One normal is drawn per beacon in slice order, so a
/// prefix of the beacon list sees the same noise as the full list.
pub fn simulate_toa<R: Rng + ?Sized>(
    beacons: &[Beacon],
    device: &Position,
    noise: &ToaNoise,
    rng: &mut R,
) -> Vec<RangeObservation> {
    beacons
        .iter()
        .map(|b| {
            let c = b.technology.speed();
            let bias_m = noise.nlos_bias_m.get(&b.id).copied().unwrap_or(0.0);
            let d = (b.position - device).norm();
            let toa_s = (d + bias_m) / c + noise.clock_bias_s + noise.sigma_s * std_normal(rng);
            RangeObservation {
                beacon: b.id,
                anchor: b.position,
                toa_s,
                range_m: c * toa_s,
                speed_m_s: c,
                sigma_m: c * noise.sigma_s,
                nlos_bias_m: bias_m,
            }
        })
        .collect()
}
