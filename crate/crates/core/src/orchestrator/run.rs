use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::facility::{build_room, RoomSpec, SurfaceCounts};
use crate::geometry::{pos, Position};
use crate::netsim::{LinkTemplate, SimTime, TopologyKind};
use crate::phy::{
    calibrated_weights, channel_gain, coherent_receive_power, dbm_to_w, expected_phase_noise_gain,
    phase_error_from_clock, received_power_w, reciprocity_calibrate, uplink_pilot_estimate, wpt_harvest, ChannelModel,
    PropagationKind, ReciprocityMeasurement,
};
use crate::positioning::{
    evaluate_scenario, evaluate_vlp, Beacon, ErrorStats, EvalSetup, Led, RansacConfig, SolverConfig, Technology,
    ToaNoise,
};
use crate::rng::{stream, STREAM_CHAINS, STREAM_PHY};
use crate::rover::{energy_feasible, plan_grid, route_avoiding, RoverError};
use crate::stats;
use crate::timesync::sim::{run_sync, SyncSimConfig, SyncSimResult};
use crate::timesync::ServoConfig;

use super::metrics::{MetricRecord, Unit};
use super::scenario::{ChannelChoice, ExperimentKind, Scenario, TechnologyChoice, TopologyChoice};
use super::RunError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub run_id: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub experiment: ExperimentKind,
    pub records: Vec<MetricRecord>,
    /// Hash of the discrete-event trace, or of the records for experiments
    /// that do not run the event engine.
    pub trace_hash: String,
    pub wall_clock_s: f64,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.records.iter().find(|r| r.metric == name).map(|r| r.value)
    }
}

/// Name of the metric that summarizes a run of `kind` in sweep tables.
pub fn headline_metric(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::SyncAccuracy => "offset_error_p99_abs",
        ExperimentKind::CoherentGainVsSync => "coherent_gain_mean",
        ExperimentKind::WptFocus => "harvested_energy_j",
        ExperimentKind::PositioningEval => "median_error_m",
        ExperimentKind::RoverPlan => "drive_distance_m",
    }
}

struct Recorder {
    run_id: String,
    seed: u64,
    experiment: &'static str,
    records: Vec<MetricRecord>,
}

impl Recorder {
    fn push(&mut self, metric: impl Into<String>, value: f64, unit: Unit, sim_time: SimTime) {
        self.records.push(MetricRecord {
            run_id: self.run_id.clone(),
            seed: self.seed,
            experiment: self.experiment.to_string(),
            metric: metric.into(),
            value,
            unit,
            sim_time_ps: sim_time.as_ps(),
        });
    }
}

/// Runs one experiment. Output depends only on `(scenario, seed)`.
pub fn run(scenario: &Scenario, seed: u64) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let scenario_hash = scenario.hash();
    let kind = scenario.experiment.kind;
    let mut rec = Recorder {
        run_id: format!("{}-s{seed}", &scenario_hash[..12]),
        seed,
        experiment: kind.as_str(),
        records: Vec::new(),
    };
    let fail = |message: String| RunError { experiment: kind.as_str(), seed, message };
    let trace = match kind {
        ExperimentKind::SyncAccuracy => Some(sync_accuracy(scenario, seed, &mut rec).map_err(fail)?),
        ExperimentKind::CoherentGainVsSync => Some(coherent_gain_vs_sync(scenario, seed, &mut rec).map_err(fail)?),
        ExperimentKind::WptFocus => Some(wpt_focus(scenario, seed, &mut rec).map_err(fail)?),
        ExperimentKind::PositioningEval => {
            positioning_eval(scenario, seed, &mut rec).map_err(fail)?;
            None
        }
        ExperimentKind::RoverPlan => {
            rover_plan(scenario, &mut rec).map_err(fail)?;
            None
        }
    };
    let trace_hash = trace.unwrap_or_else(|| {
        let bytes = super::metrics::to_csv(&rec.records).expect("in-memory CSV");
        hex::encode(Sha256::digest(&bytes))
    });
    Ok(RunReport {
        run_id: rec.run_id,
        scenario_hash,
        seed,
        experiment: kind,
        records: rec.records,
        trace_hash,
        wall_clock_s: started.elapsed().as_secs_f64(),
    })
}

/// Synchronization settings of a scenario.
pub fn sync_config(s: &Scenario) -> SyncSimConfig {
    let t = &s.topology;
    let y = &s.sync;
    let interval = SimTime::from_secs_f64(y.sync_interval_ms / 1e3);
    let intervals = match s.experiment.duration_s {
        Some(d) => ((d / interval.as_secs_f64()).round() as u32).max(1),
        None => y.intervals,
    };
    SyncSimConfig {
        topology: match t.kind {
            TopologyChoice::Star => TopologyKind::Star,
            TopologyChoice::Tree => TopologyKind::Tree { fanout: t.fanout },
            TopologyChoice::Mesh => TopologyKind::Mesh { fanout: t.fanout },
        },
        tiles: t.tiles,
        link: LinkTemplate {
            delay: SimTime::from_ns_f64(t.link_delay_ns),
            asymmetry: SimTime::from_ns_f64(t.asymmetry_ns),
            jitter_sigma: SimTime::from_ns_f64(t.link_jitter_ns),
            residence: SimTime::from_ns_f64(t.residence_ns),
            residence_jitter: SimTime::from_ns_f64(t.residence_jitter_ns),
            transparent_clock: true,
        },
        switch_clock: t.switch_clock,
        mode: y.mode,
        interval,
        intervals,
        settle_intervals: y.settle_intervals.min(intervals - 1),
        ts_jitter: SimTime::from_ns_f64(y.ts_jitter_ns),
        known_asymmetry: SimTime::from_ns_f64(y.known_asymmetry_ns),
        dedicated_error: SimTime::from_ns_f64(y.dedicated_error_ns),
        servo: ServoConfig { kp: y.servo_kp, ki: y.servo_ki },
        initial_offset_spread: SimTime::from_ns_f64(y.initial_offset_spread_ns),
        initial_skew_spread: y.initial_skew_spread_ppm * 1e-6,
        drift_rw_sigma: y.drift_rw_sigma,
    }
}

fn ns(ps: f64) -> f64 {
    ps / 1e3
}

fn sync_accuracy(s: &Scenario, seed: u64, rec: &mut Recorder) -> Result<String, String> {
    let res = run_sync(&sync_config(s), seed).map_err(|e| e.to_string())?;
    let t = res.end_time;
    for node in res.tiles() {
        let errs = res.converged(node);
        let abs: Vec<f64> = errs.iter().map(|e| e.abs()).collect();
        rec.push(format!("node_{}/offset_error_p99_abs", node.0), ns(stats::percentile(&abs, 99.0).unwrap_or(0.0)), Unit::Ns, t);
        rec.push(format!("node_{}/offset_error_mean", node.0), ns(stats::mean(&errs).unwrap_or(0.0)), Unit::Ns, t);
    }
    let all = res.all_converged();
    let abs: Vec<f64> = all.iter().map(|e| e.abs()).collect();
    rec.push("offset_error_p50_abs", ns(stats::percentile(&abs, 50.0).unwrap_or(0.0)), Unit::Ns, t);
    rec.push("offset_error_p99_abs", ns(stats::percentile(&abs, 99.0).unwrap_or(0.0)), Unit::Ns, t);
    rec.push("offset_error_max_abs", ns(abs.iter().copied().fold(0.0, f64::max)), Unit::Ns, t);
    rec.push("offset_error_mean", ns(stats::mean(&all).unwrap_or(0.0)), Unit::Ns, t);
    rec.push("offset_error_std", ns(stats::std_dev(&all).unwrap_or(0.0)), Unit::Ns, t);
    rec.push("tiles", res.samples.len() as f64, Unit::Count, t);
    rec.push("samples", all.len() as f64, Unit::Count, t);
    rec.push("events", res.events as f64, Unit::Count, t);
    Ok(res.trace_hash)
}

/// Per converged interval, the tile clock errors in node order.
fn errors_by_interval(res: &SyncSimResult) -> BTreeMap<u32, Vec<SimTime>> {
    let mut by: BTreeMap<u32, Vec<SimTime>> = BTreeMap::new();
    for samples in res.samples.values() {
        for x in samples.iter().filter(|x| x.interval >= res.settle_intervals) {
            by.entry(x.interval).or_default().push(x.error);
        }
    }
    by
}

fn coherent_gain_vs_sync(s: &Scenario, seed: u64, rec: &mut Recorder) -> Result<String, String> {
    let res = run_sync(&sync_config(s), seed).map_err(|e| e.to_string())?;
    let t = res.end_time;
    let carrier = s.phy.carrier_hz;
    let mut gains = Vec::new();
    let mut phases = Vec::new();
    for errs in errors_by_interval(&res).values() {
        let phi: Vec<f64> = errs
            .iter()
            .map(|e| phase_error_from_clock(*e, carrier))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let ones = vec![Complex64::new(1.0, 0.0); phi.len()];
        gains.push(coherent_receive_power(&ones, &ones, &phi).map_err(|e| e.to_string())?);
        phases.extend(phi);
    }
    let n = res.samples.len() as f64;
    let mean = stats::mean(&gains).ok_or("no converged intervals")?;
    let se = stats::std_dev(&gains).unwrap_or(0.0) / (gains.len() as f64).sqrt();
    let sigma = stats::std_dev(&phases).unwrap_or(0.0);
    rec.push("coherent_gain_mean", mean, Unit::Ratio, t);
    rec.push("coherent_gain_se", se, Unit::Ratio, t);
    rec.push("coherent_gain_db", 10.0 * mean.log10(), Unit::Db, t);
    rec.push("gain_fraction_of_n2", mean / (n * n), Unit::Ratio, t);
    rec.push("expected_gain_phase_noise", expected_phase_noise_gain(n as usize, sigma), Unit::Ratio, t);
    rec.push("tiles", n, Unit::Count, t);
    rec.push("intervals", gains.len() as f64, Unit::Count, t);
    Ok(res.trace_hash)
}

fn random_gain<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Complex64 {
    let mag = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    Complex64::from_polar(mag, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

fn wpt_focus(s: &Scenario, seed: u64, rec: &mut Recorder) -> Result<String, String> {
    let p = &s.phy;
    let n = p.transmitters as usize;
    let room = RoomSpec {
        counts: SurfaceCounts::only(p.transmit_surface, p.transmitters),
        ..s.room_spec()
    };
    let tiles = build_room(&room).map_err(|e| e.to_string())?;
    let antennas: Vec<Position> = tiles.iter().map(|t| t.center()).collect();
    let device = pos(p.device_m[0], p.device_m[1], p.device_m[2]);
    let model = ChannelModel {
        kind: match p.model {
            ChannelChoice::FreeSpace => PropagationKind::FreeSpace,
            ChannelChoice::LogDistance => PropagationKind::LogDistance { exponent: p.exponent },
        },
        carrier_hz: p.carrier_hz,
        reference_distance_m: p.reference_distance_m,
    };
    let err = |e: crate::phy::PhyError| e.to_string();
    let h: Vec<Complex64> = antennas.iter().map(|a| channel_gain(a, &device, &model)).collect::<Result<_, _>>().map_err(err)?;

    let mut chains = stream(seed, STREAM_CHAINS);
    let tx: Vec<Complex64> = (0..n).map(|_| random_gain(&mut chains, p.chain_gain_min, p.chain_gain_max)).collect();
    let rx: Vec<Complex64> = (0..n).map(|_| random_gain(&mut chains, p.chain_gain_min, p.chain_gain_max)).collect();
    let dev_tx = random_gain(&mut chains, p.chain_gain_min, p.chain_gain_max);
    let dev_rx = random_gain(&mut chains, p.chain_gain_min, p.chain_gain_max);

    // star from tile 0 plus a ring, so calibration has redundant paths
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (0, i)).collect();
    pairs.extend((1..n.saturating_sub(1)).map(|i| (i, i + 1)));
    let measurements: Vec<ReciprocityMeasurement> = pairs
        .iter()
        .map(|&(a, b)| {
            let hab = channel_gain(&antennas[a], &antennas[b], &model)?;
            Ok(ReciprocityMeasurement { a, b, forward: rx[b] * hab * tx[a], reverse: rx[a] * hab * tx[b] })
        })
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let calibration = reciprocity_calibrate(n, &measurements, 0).map_err(err)?;

    let mut phy_rng = stream(seed, STREAM_PHY);
    let mean_uplink = h.iter().zip(&rx).map(|(h, r)| (r * h * dev_tx).norm()).sum::<f64>() / n as f64;
    let estimates = uplink_pilot_estimate(dev_tx, &rx, &h, p.pilot_noise_sigma * mean_uplink, &mut phy_rng).map_err(err)?;
    let weights = calibrated_weights(&estimates, &calibration).map_err(err)?;

    let mut sync = sync_config(s);
    sync.tiles = p.transmitters;
    let res = run_sync(&sync, seed).map_err(|e| e.to_string())?;
    let phases: Vec<f64> = res
        .final_errors()
        .into_iter()
        .map(|e| phase_error_from_clock(e, p.carrier_hz))
        .collect::<Result<_, _>>()
        .map_err(err)?;

    let downlink: Vec<Complex64> = tx.iter().zip(&h).map(|(t, h)| t * h * dev_rx).collect();
    let power = received_power_w(&weights, &downlink, &phases, dbm_to_w(p.tx_power_dbm)).map_err(err)?;
    let gain = coherent_receive_power(&weights, &downlink, &phases).map_err(err)?;
    let duration = s.experiment.duration_s.unwrap_or(1.0);
    let t = SimTime::from_secs_f64(duration);
    rec.push("received_power_w", power, Unit::W, t);
    rec.push("coherent_gain", gain, Unit::Ratio, t);
    rec.push("coherent_gain_db", 10.0 * gain.log10(), Unit::Db, t);
    rec.push("gain_fraction_of_n2", gain / (n * n) as f64, Unit::Ratio, t);
    match wpt_harvest(power, duration, p.efficiency, p.energy_target_j) {
        Ok(hv) => {
            rec.push("harvested_energy_j", hv.energy_j, Unit::J, t);
            rec.push("time_to_target_s", hv.time_to_target_s, Unit::S, t);
        }
        Err(crate::phy::PhyError::ZeroPower) => rec.push("harvested_energy_j", 0.0, Unit::J, t),
        Err(e) => return Err(e.to_string()),
    }
    rec.push("transmitters", n as f64, Unit::Count, t);
    Ok(res.trace_hash)
}

fn positioning_eval(s: &Scenario, seed: u64, rec: &mut Recorder) -> Result<(), String> {
    let p = &s.positioning;
    let placed = s.beacon_positions().map_err(|e| e.to_string())?;
    let points = s.eval_points();
    let solver = SolverConfig::default();
    let stats: ErrorStats = match p.technology {
        TechnologyChoice::Vlp => {
            let leds: Vec<Led> = placed
                .iter()
                .map(|&(id, position)| Led::downward(id, position, p.lambertian_order, p.led_power_w))
                .collect();
            evaluate_vlp(&leds, &points, p.receiver_area_m2, p.rss_noise, &solver, seed)
        }
        tech => {
            let technology = if tech == TechnologyChoice::Rf { Technology::Rf } else { Technology::Acoustic };
            let setup = EvalSetup {
                beacons: placed.iter().map(|&(id, position)| Beacon { id, position, technology }).collect(),
                noise: ToaNoise {
                    sigma_s: p.toa_sigma_s,
                    clock_bias_s: p.clock_bias_s,
                    nlos_bias_m: p.nlos.iter().map(|n| (n.beacon, n.bias_m)).collect(),
                },
                estimator: p.estimator,
                solver,
                ransac: RansacConfig {
                    iterations: p.ransac_iterations as usize,
                    threshold_m: p.ransac_threshold_m,
                    sample_size: p.ransac_sample as usize,
                    ..Default::default()
                },
            };
            evaluate_scenario(&setup, &points, seed)
        }
    }
    .map_err(|e| e.to_string())?;
    let t = SimTime::ZERO;
    if stats.failures < points.len() {
        rec.push("median_error_m", stats.median_m, Unit::M, t);
        rec.push("p95_error_m", stats.p95_m, Unit::M, t);
        let ok: Vec<f64> = stats.errors.iter().flatten().copied().collect();
        rec.push("mean_error_m", stats::mean(&ok).unwrap_or(0.0), Unit::M, t);
    }
    rec.push("failures", stats.failures as f64, Unit::Count, t);
    rec.push("points", points.len() as f64, Unit::Count, t);
    rec.push("beacons", placed.len() as f64, Unit::Count, t);
    Ok(())
}

fn rover_plan(s: &Scenario, rec: &mut Recorder) -> Result<(), String> {
    let r = &s.rover;
    let cfg = r.config();
    let plan = plan_grid(s.room.length_m, s.room.width_m, r.spacing_m, &r.heights_m, &cfg).map_err(|e| e.to_string())?;
    let routed = route_avoiding(&plan, &r.obstacles, s.room.length_m, s.room.width_m, &cfg).map_err(|e| e.to_string())?;
    let distance = routed.plan.drive_distance_m;
    let t = SimTime::ZERO;
    rec.push("waypoints", routed.plan.waypoints.len() as f64, Unit::Count, t);
    rec.push("unreachable_waypoints", routed.unreachable.len() as f64, Unit::Count, t);
    rec.push("measurements", (routed.plan.waypoints.len() * r.heights_m.len()) as f64, Unit::Count, t);
    rec.push("drive_distance_m", distance, Unit::M, t);
    rec.push("drive_time_s", distance / cfg.speed_m_s, Unit::S, t);
    rec.push("energy_wh", routed.plan.energy_wh, Unit::Wh, t);
    match energy_feasible(distance, &cfg) {
        Ok(e) => {
            rec.push("battery_feasible", 1.0, Unit::Ratio, t);
            rec.push("battery_margin_wh", e.remaining_wh, Unit::Wh, t);
        }
        Err(RoverError::InsufficientBattery { shortfall_wh, .. }) => {
            rec.push("battery_feasible", 0.0, Unit::Ratio, t);
            rec.push("battery_margin_wh", -shortfall_wh, Unit::Wh, t);
        }
        Err(e) => return Err(e.to_string()),
    }
    Ok(())
}
