use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Position;
use crate::rng::item_stream;
use crate::stats::{median, percentile};

use super::{
    ransac_trilaterate, simulate_toa, trilaterate_hybrid, trilaterate_ls, vlp_position, vlp_rss, Beacon, Led,
    PositioningError, RansacConfig, SolverConfig, ToaNoise, VlpObservation, VlpReceiver,
};
use crate::geometry::Direction;
use crate::rng::std_normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Ls,
    Hybrid,
    Ransac,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSetup {
    pub beacons: Vec<Beacon>,
    pub noise: ToaNoise,
    pub estimator: Estimator,
    pub solver: SolverConfig,
    pub ransac: RansacConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStats {
    /// Euclidean error per evaluation point; `None` where the estimator failed.
    pub errors: Vec<Option<f64>>,
    pub median_m: f64,
    pub p95_m: f64,
    pub failures: usize,
}

/// Simulates and solves every evaluation point with its own random stream,
/// so results do not depend on scheduling.
pub fn evaluate_scenario(setup: &EvalSetup, points: &[Position], seed: u64) -> Result<ErrorStats, PositioningError> {
    if points.is_empty() {
        return Err(PositioningError::InvalidInput { name: "evaluation points", value: 0.0 });
    }
    let errors: Vec<Option<f64>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = item_stream(seed, i as u64);
            let obs = simulate_toa(&setup.beacons, p, &setup.noise, &mut rng);
            let est = match setup.estimator {
                Estimator::Ls => trilaterate_ls(&obs, &setup.solver),
                Estimator::Hybrid => trilaterate_hybrid(&obs, &setup.solver),
                Estimator::Ransac => ransac_trilaterate(&obs, &setup.ransac, &mut rng),
            };
            est.ok().map(|e| (e.position - p).norm())
        })
        .collect();
    Ok(summarize(errors))
}

/// RSS multilateration over `points`, each receiver facing up at the
/// point's height. `rss_noise` is the relative sigma of multiplicative
/// Gaussian noise on every received power.
pub fn evaluate_vlp(
    leds: &[Led],
    points: &[Position],
    receiver_area_m2: f64,
    rss_noise: f64,
    solver: &SolverConfig,
    seed: u64,
) -> Result<ErrorStats, PositioningError> {
    if points.is_empty() {
        return Err(PositioningError::InvalidInput { name: "evaluation points", value: 0.0 });
    }
    let errors: Vec<Option<f64>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = item_stream(seed, i as u64);
            let rx = VlpReceiver { position: *p, normal: Direction::new(0.0, 0.0, 1.0), area_m2: receiver_area_m2 };
            let obs: Vec<VlpObservation> = leds
                .iter()
                .map(|led| {
                    let factor = 1.0 + rss_noise * std_normal(&mut rng);
                    VlpObservation { led: *led, power_w: vlp_rss(led, &rx) * factor }
                })
                .collect();
            vlp_position(&obs, p.z, receiver_area_m2, solver).ok().map(|e| (e.position - p).norm())
        })
        .collect();
    Ok(summarize(errors))
}

fn summarize(errors: Vec<Option<f64>>) -> ErrorStats {
    let ok: Vec<f64> = errors.iter().flatten().copied().collect();
    ErrorStats {
        failures: errors.len() - ok.len(),
        median_m: median(&ok).unwrap_or(f64::NAN),
        p95_m: percentile(&ok, 95.0).unwrap_or(f64::NAN),
        errors,
    }
}
