use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::facility::{
    build_room, mount_world_position, plan_power, AdcSpec, PowerError, PowerLimits, PowerPlan, RoomSpec, Surface,
    SurfaceCounts, TileAlignment, TileGrid, TileId,
};
use crate::geometry::{pos, Position};
use crate::positioning::Estimator;
use crate::rover::Obstacle;
use crate::timesync::sim::SwitchClock;
use crate::timesync::SyncMode;

use super::ScenarioError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub room: RoomSection,
    #[serde(default)]
    pub tiles: TilesSection,
    #[serde(default)]
    pub power: PowerSection,
    #[serde(default)]
    pub daq: DaqSection,
    #[serde(default)]
    pub topology: TopologySection,
    #[serde(default)]
    pub sync: SyncSection,
    #[serde(default)]
    pub phy: PhySection,
    #[serde(default)]
    pub positioning: PositioningSection,
    #[serde(default)]
    pub rover: RoverSection,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomSection {
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub alignment: TileAlignment,
}

impl Default for RoomSection {
    fn default() -> Self {
        let spec = RoomSpec::default();
        RoomSection { length_m: spec.length_m, width_m: spec.width_m, height_m: spec.height_m, alignment: spec.alignment }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilesSection {
    pub wall_a: u32,
    pub wall_b: u32,
    pub ceiling: u32,
    pub floor: u32,
}

impl Default for TilesSection {
    fn default() -> Self {
        let c = SurfaceCounts::default();
        TilesSection { wall_a: c.wall_a, wall_b: c.wall_b, ceiling: c.ceiling, floor: c.floor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    pub port_cap_w: f64,
    pub aggregate_cap_w: f64,
    pub port_count_cap: u32,
    /// Number of PoE-powered tiles.
    pub powered_tiles: u32,
    pub per_tile_draw_w: f64,
}

impl Default for PowerSection {
    fn default() -> Self {
        PowerSection {
            port_cap_w: 90.0,
            aggregate_cap_w: 9000.0,
            port_count_cap: 156,
            powered_tiles: 140,
            per_tile_draw_w: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaqSection {
    pub sample_rate_hz: f64,
    pub bits: u32,
    pub full_scale_v: f64,
    pub channels: u32,
}

impl Default for DaqSection {
    fn default() -> Self {
        DaqSection { sample_rate_hz: 1.25e6, bits: 16, full_scale_v: 1.0, channels: 192 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyChoice {
    Star,
    Tree,
    Mesh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub kind: TopologyChoice,
    pub fanout: u32,
    /// Tiles taking part in synchronization experiments.
    pub tiles: u32,
    pub link_delay_ns: f64,
    pub link_jitter_ns: f64,
    pub residence_ns: f64,
    pub residence_jitter_ns: f64,
    pub asymmetry_ns: f64,
    pub switch_clock: SwitchClock,
}

impl Default for TopologySection {
    fn default() -> Self {
        TopologySection {
            kind: TopologyChoice::Tree,
            fanout: 48,
            tiles: 140,
            link_delay_ns: 500.0,
            link_jitter_ns: 0.0,
            residence_ns: 1000.0,
            residence_jitter_ns: 0.0,
            asymmetry_ns: 0.0,
            switch_clock: SwitchClock::Transparent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncSection {
    pub mode: SyncMode,
    pub sync_interval_ms: f64,
    pub intervals: u32,
    pub settle_intervals: u32,
    pub ts_jitter_ns: f64,
    pub known_asymmetry_ns: f64,
    pub dedicated_error_ns: f64,
    pub servo_kp: f64,
    pub servo_ki: f64,
    pub initial_offset_spread_ns: f64,
    pub initial_skew_spread_ppm: f64,
    pub drift_rw_sigma: f64,
}

impl Default for SyncSection {
    fn default() -> Self {
        SyncSection {
            mode: SyncMode::MessageSync,
            sync_interval_ms: 125.0,
            intervals: 200,
            settle_intervals: 50,
            ts_jitter_ns: 8.0,
            known_asymmetry_ns: 0.0,
            dedicated_error_ns: 0.0,
            servo_kp: 0.7,
            servo_ki: 0.3,
            initial_offset_spread_ns: 10_000.0,
            initial_skew_spread_ppm: 5.0,
            drift_rw_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelChoice {
    FreeSpace,
    LogDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhySection {
    pub carrier_hz: f64,
    pub model: ChannelChoice,
    pub exponent: f64,
    pub reference_distance_m: f64,
    pub tx_power_dbm: f64,
    /// Magnitude range of the random RF-chain gains; phases are uniform.
    pub chain_gain_min: f64,
    pub chain_gain_max: f64,
    pub pilot_noise_sigma: f64,
    pub efficiency: f64,
    pub energy_target_j: f64,
    pub device_m: [f64; 3],
    pub transmit_surface: Surface,
    pub transmitters: u32,
}

impl Default for PhySection {
    fn default() -> Self {
        PhySection {
            carrier_hz: 3.8e9,
            model: ChannelChoice::FreeSpace,
            exponent: 2.0,
            reference_distance_m: 1.0,
            tx_power_dbm: 20.0,
            chain_gain_min: 0.5,
            chain_gain_max: 2.0,
            pilot_noise_sigma: 0.0,
            efficiency: 0.5,
            energy_target_j: crate::phy::DEFAULT_ENERGY_TARGET_J,
            device_m: [4.0, 2.0, 1.0],
            transmit_surface: Surface::Ceiling,
            transmitters: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechnologyChoice {
    Acoustic,
    Rf,
    Vlp,
}

/// A beacon is placed either at explicit coordinates or on a tile mount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeaconSpec {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mount: Option<[i64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlosSpec {
    pub beacon: u32,
    pub bias_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PositioningSection {
    pub technology: TechnologyChoice,
    pub estimator: Estimator,
    pub toa_sigma_s: f64,
    pub clock_bias_s: f64,
    pub beacons: Vec<BeaconSpec>,
    pub nlos: Vec<NlosSpec>,
    pub ransac_iterations: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ransac_threshold_m: Option<f64>,
    pub ransac_sample: u32,
    pub eval_spacing_m: f64,
    pub eval_heights_m: Vec<f64>,
    /// Explicit evaluation points; replaces the grid when non-empty.
    pub points: Vec<[f64; 3]>,
    pub lambertian_order: f64,
    pub led_power_w: f64,
    pub receiver_area_m2: f64,
    /// Relative standard deviation of multiplicative RSS noise.
    pub rss_noise: f64,
}

impl Default for PositioningSection {
    fn default() -> Self {
        let spots = [[0.2, 0.2, 2.3], [7.8, 0.2, 1.6], [7.8, 3.8, 2.3], [0.2, 3.8, 1.6]];
        PositioningSection {
            technology: TechnologyChoice::Acoustic,
            estimator: Estimator::Ls,
            toa_sigma_s: 0.0,
            clock_bias_s: 0.0,
            beacons: spots
                .iter()
                .enumerate()
                .map(|(i, p)| BeaconSpec { id: i as u32, position: Some(*p), tile: None, mount: None })
                .collect(),
            nlos: Vec::new(),
            ransac_iterations: 200,
            ransac_threshold_m: None,
            ransac_sample: 4,
            eval_spacing_m: 0.5,
            eval_heights_m: vec![0.6, 1.2, 1.8],
            points: Vec::new(),
            lambertian_order: 1.0,
            led_power_w: 1.0,
            receiver_area_m2: 1e-4,
            rss_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoverSection {
    pub spacing_m: f64,
    pub heights_m: Vec<f64>,
    pub obstacles: Vec<Obstacle>,
    pub footprint_m: [f64; 2],
    pub drive_power_w: f64,
    pub speed_m_s: f64,
    pub lift_min_m: f64,
    pub lift_max_m: f64,
    pub sensor_min_m: f64,
    pub sensor_max_m: f64,
    pub sensor_resolution_m: f64,
    pub localization_precision_m: f64,
    pub battery_wh: f64,
}

impl Default for RoverSection {
    fn default() -> Self {
        let c = crate::rover::RoverConfig::default();
        RoverSection {
            spacing_m: 1.0,
            heights_m: vec![1.0],
            obstacles: Vec::new(),
            footprint_m: c.footprint_m,
            drive_power_w: c.drive_power_w,
            speed_m_s: c.speed_m_s,
            lift_min_m: c.lift_min_m,
            lift_max_m: c.lift_max_m,
            sensor_min_m: c.sensor_min_m,
            sensor_max_m: c.sensor_max_m,
            sensor_resolution_m: c.sensor_resolution_m,
            localization_precision_m: c.localization_precision_m,
            battery_wh: c.battery_wh,
        }
    }
}

impl RoverSection {
    pub fn config(&self) -> crate::rover::RoverConfig {
        crate::rover::RoverConfig {
            lift_min_m: self.lift_min_m,
            lift_max_m: self.lift_max_m,
            sensor_min_m: self.sensor_min_m,
            sensor_max_m: self.sensor_max_m,
            sensor_resolution_m: self.sensor_resolution_m,
            localization_precision_m: self.localization_precision_m,
            battery_wh: self.battery_wh,
            footprint_m: self.footprint_m,
            drive_power_w: self.drive_power_w,
            speed_m_s: self.speed_m_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SyncAccuracy,
    WptFocus,
    PositioningEval,
    RoverPlan,
    CoherentGainVsSync,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SyncAccuracy => "sync_accuracy",
            ExperimentKind::WptFocus => "wpt_focus",
            ExperimentKind::PositioningEval => "positioning_eval",
            ExperimentKind::RoverPlan => "rover_plan",
            ExperimentKind::CoherentGainVsSync => "coherent_gain_vs_sync",
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Simulated span for synchronization experiments, harvesting window
    /// for `wpt_focus`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl Scenario {
    /// Scenario with every default filled in.
    pub fn with_kind(kind: ExperimentKind) -> Self {
        Scenario {
            room: Default::default(),
            tiles: Default::default(),
            power: Default::default(),
            daq: Default::default(),
            topology: Default::default(),
            sync: Default::default(),
            phy: Default::default(),
            positioning: Default::default(),
            rover: Default::default(),
            experiment: ExperimentSection { kind, seeds: default_seeds(), duration_s: None },
        }
    }

    pub fn room_spec(&self) -> RoomSpec {
        RoomSpec {
            length_m: self.room.length_m,
            width_m: self.room.width_m,
            height_m: self.room.height_m,
            counts: SurfaceCounts {
                wall_a: self.tiles.wall_a,
                wall_b: self.tiles.wall_b,
                ceiling: self.tiles.ceiling,
                floor: self.tiles.floor,
            },
            alignment: self.room.alignment,
        }
    }

    /// SHA-256 over the canonical JSON form, whose object keys are sorted,
    /// so the hash ignores key order and formatting of the source text.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&serde_json::to_value(self).expect("scenario serializes"))
            .expect("json value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn inside_room(&self, p: &Position) -> bool {
        (0.0..=self.room.length_m).contains(&p.x)
            && (0.0..=self.room.width_m).contains(&p.y)
            && (0.0..=self.room.height_m).contains(&p.z)
    }

    /// Beacon positions with tile/mount references resolved.
    pub fn beacon_positions(&self) -> Result<Vec<(u32, Position)>, ScenarioError> {
        let mut grid: Option<Result<TileGrid, String>> = None;
        let mut out = Vec::with_capacity(self.positioning.beacons.len());
        for (i, b) in self.positioning.beacons.iter().enumerate() {
            let path = format!("positioning.beacons[{i}]");
            let p = match (b.position, b.tile) {
                (Some(p), None) => pos(p[0], p[1], p[2]),
                (None, Some(tile)) => {
                    let tiles = grid
                        .get_or_insert_with(|| build_room(&self.room_spec()).map_err(|e| e.to_string()))
                        .as_ref()
                        .map_err(|e| ScenarioError::CrossRef {
                            path: format!("{path}.tile"),
                            message: format!("tile {tile} cannot be resolved, room layout is invalid: {e}"),
                        })?;
                    let t = tiles.iter().find(|t| t.id.0 == tile).ok_or_else(|| ScenarioError::CrossRef {
                        path: format!("{path}.tile"),
                        message: format!("tile {tile} does not exist ({} tiles in the room)", tiles.len()),
                    })?;
                    let [u, v] = b.mount.unwrap_or([12, 6]);
                    mount_world_position(t, u, v).map_err(|e| ScenarioError::Range {
                        path: format!("{path}.mount"),
                        message: e.to_string(),
                    })?
                }
                _ => {
                    return Err(ScenarioError::Range {
                        path,
                        message: "set exactly one of `position` or `tile`".into(),
                    })
                }
            };
            out.push((b.id, p));
        }
        Ok(out)
    }

    /// Evaluation points for positioning experiments.
    pub fn eval_points(&self) -> Vec<Position> {
        let p = &self.positioning;
        if !p.points.is_empty() {
            return p.points.iter().map(|q| pos(q[0], q[1], q[2])).collect();
        }
        let s = p.eval_spacing_m;
        let axis = |len: f64| -> Vec<f64> {
            (0..).map(|k| s / 2.0 + k as f64 * s).take_while(|&x| x <= len).collect()
        };
        let (xs, ys) = (axis(self.room.length_m), axis(self.room.width_m));
        let mut out = Vec::with_capacity(xs.len() * ys.len() * p.eval_heights_m.len());
        for &x in &xs {
            for &y in &ys {
                for &z in &p.eval_heights_m {
                    out.push(pos(x, y, z));
                }
            }
        }
        out
    }

    pub fn power_limits(&self) -> PowerLimits {
        PowerLimits {
            port_cap_w: self.power.port_cap_w,
            aggregate_cap_w: self.power.aggregate_cap_w,
            port_count_cap: self.power.port_count_cap,
        }
    }

    /// Uniform draw on every powered tile.
    pub fn power_plan(&self) -> Result<PowerPlan, PowerError> {
        plan_power((0..self.power.powered_tiles).map(TileId), self.power.per_tile_draw_w, &self.power_limits())
    }

    pub fn adc(&self) -> AdcSpec {
        AdcSpec {
            sample_rate_hz: self.daq.sample_rate_hz,
            bits: self.daq.bits,
            full_scale_v: self.daq.full_scale_v,
            channels: self.daq.channels,
        }
    }

    /// Range and cross-reference checks beyond what the grammar enforces.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let range = |path: &str, ok: bool, message: String| {
            if ok {
                Ok(())
            } else {
                Err(ScenarioError::Range { path: path.to_string(), message })
            }
        };
        let positive = |path: &str, v: f64| range(path, v > 0.0 && v.is_finite(), format!("must be > 0, got {v}"));
        let non_negative =
            |path: &str, v: f64| range(path, v >= 0.0 && v.is_finite(), format!("must be >= 0, got {v}"));

        positive("room.length_m", self.room.length_m)?;
        positive("room.width_m", self.room.width_m)?;
        positive("room.height_m", self.room.height_m)?;

        positive("power.port_cap_w", self.power.port_cap_w)?;
        positive("power.aggregate_cap_w", self.power.aggregate_cap_w)?;
        non_negative("power.per_tile_draw_w", self.power.per_tile_draw_w)?;

        positive("daq.sample_rate_hz", self.daq.sample_rate_hz)?;
        range("daq.bits", (1..=32).contains(&self.daq.bits), format!("must be in 1..=32, got {}", self.daq.bits))?;
        positive("daq.full_scale_v", self.daq.full_scale_v)?;
        if let Err(e) = self.power_plan() {
            let path = match e {
                PowerError::PortCountExceeded { .. } => "power.powered_tiles",
                _ => "power.per_tile_draw_w",
            };
            return Err(ScenarioError::Range { path: path.into(), message: e.to_string() });
        }

        let t = &self.topology;
        range("topology.tiles", t.tiles >= 1, "must be >= 1".into())?;
        if t.kind != TopologyChoice::Star {
            range("topology.fanout", t.fanout >= 1, "must be >= 1".into())?;
        }
        non_negative("topology.link_delay_ns", t.link_delay_ns)?;
        non_negative("topology.link_jitter_ns", t.link_jitter_ns)?;
        non_negative("topology.residence_ns", t.residence_ns)?;
        non_negative("topology.residence_jitter_ns", t.residence_jitter_ns)?;
        range(
            "topology.asymmetry_ns",
            t.asymmetry_ns.abs() <= 2.0 * t.link_delay_ns,
            format!("|asymmetry| must not exceed twice the link delay ({} ns)", t.link_delay_ns),
        )?;

        let s = &self.sync;
        positive("sync.sync_interval_ms", s.sync_interval_ms)?;
        range("sync.intervals", s.intervals >= 1, "must be >= 1".into())?;
        range(
            "sync.settle_intervals",
            s.settle_intervals < s.intervals,
            format!("must be below sync.intervals ({})", s.intervals),
        )?;
        non_negative("sync.ts_jitter_ns", s.ts_jitter_ns)?;
        non_negative("sync.dedicated_error_ns", s.dedicated_error_ns)?;
        range("sync.known_asymmetry_ns", s.known_asymmetry_ns.is_finite(), "must be finite".into())?;
        non_negative("sync.servo_kp", s.servo_kp)?;
        non_negative("sync.servo_ki", s.servo_ki)?;
        non_negative("sync.initial_offset_spread_ns", s.initial_offset_spread_ns)?;
        range(
            "sync.initial_skew_spread_ppm",
            (0.0..1000.0).contains(&s.initial_skew_spread_ppm),
            "must be in [0, 1000)".into(),
        )?;
        non_negative("sync.drift_rw_sigma", s.drift_rw_sigma)?;

        let p = &self.phy;
        range(
            "phy.carrier_hz",
            (70e6..=6e9).contains(&p.carrier_hz),
            format!("must be within [70 MHz, 6 GHz], got {}", p.carrier_hz),
        )?;
        if p.model == ChannelChoice::LogDistance {
            range("phy.exponent", p.exponent >= 1.0, format!("must be >= 1, got {}", p.exponent))?;
            positive("phy.reference_distance_m", p.reference_distance_m)?;
        }
        range("phy.tx_power_dbm", p.tx_power_dbm <= 20.0, format!("exceeds the 20 dBm radio limit: {}", p.tx_power_dbm))?;
        positive("phy.chain_gain_min", p.chain_gain_min)?;
        range("phy.chain_gain_max", p.chain_gain_max >= p.chain_gain_min, "must be >= phy.chain_gain_min".into())?;
        non_negative("phy.pilot_noise_sigma", p.pilot_noise_sigma)?;
        range("phy.efficiency", (0.0..=1.0).contains(&p.efficiency), format!("must be in [0, 1], got {}", p.efficiency))?;
        non_negative("phy.energy_target_j", p.energy_target_j)?;
        range("phy.transmitters", p.transmitters >= 1, "must be >= 1".into())?;
        let transmit_room = RoomSpec { counts: SurfaceCounts::only(p.transmit_surface, p.transmitters), ..self.room_spec() };
        if let Err(e) = build_room(&transmit_room) {
            return Err(ScenarioError::Range { path: "phy.transmitters".into(), message: e.to_string() });
        }
        let device = pos(p.device_m[0], p.device_m[1], p.device_m[2]);
        if !self.inside_room(&device) {
            return Err(ScenarioError::CrossRef { path: "phy.device_m".into(), message: "device lies outside the room".into() });
        }

        self.validate_positioning()?;

        let r = &self.rover;
        positive("rover.spacing_m", r.spacing_m)?;
        range("rover.heights_m", !r.heights_m.is_empty(), "needs at least one height".into())?;
        for (i, h) in r.heights_m.iter().enumerate() {
            range(
                &format!("rover.heights_m[{i}]"),
                (r.lift_min_m..=r.lift_max_m).contains(h),
                format!("{h} m is outside the lift range [{}, {}] m", r.lift_min_m, r.lift_max_m),
            )?;
        }
        for (i, o) in r.obstacles.iter().enumerate() {
            range(
                &format!("rover.obstacles[{i}]"),
                o.min[0] <= o.max[0] && o.min[1] <= o.max[1],
                "min must not exceed max".into(),
            )?;
        }
        positive("rover.footprint_m[0]", r.footprint_m[0])?;
        positive("rover.footprint_m[1]", r.footprint_m[1])?;
        positive("rover.drive_power_w", r.drive_power_w)?;
        positive("rover.speed_m_s", r.speed_m_s)?;
        positive("rover.battery_wh", r.battery_wh)?;
        positive("rover.sensor_resolution_m", r.sensor_resolution_m)?;
        range("rover.lift_max_m", r.lift_max_m >= r.lift_min_m, "must be >= rover.lift_min_m".into())?;

        if let Some(d) = self.experiment.duration_s {
            positive("experiment.duration_s", d)?;
        }
        Ok(())
    }

    fn validate_positioning(&self) -> Result<(), ScenarioError> {
        let p = &self.positioning;
        let range = |path: String, ok: bool, message: String| {
            if ok {
                Ok(())
            } else {
                Err(ScenarioError::Range { path, message })
            }
        };
        range("positioning.toa_sigma_s".into(), p.toa_sigma_s >= 0.0, "must be >= 0".into())?;
        range("positioning.ransac_sample".into(), p.ransac_sample >= 3, "must be >= 3".into())?;
        range("positioning.eval_spacing_m".into(), p.eval_spacing_m > 0.0, "must be > 0".into())?;
        range("positioning.lambertian_order".into(), p.lambertian_order >= 1.0, "must be >= 1".into())?;
        range("positioning.receiver_area_m2".into(), p.receiver_area_m2 > 0.0, "must be > 0".into())?;
        range("positioning.led_power_w".into(), p.led_power_w > 0.0, "must be > 0".into())?;
        range("positioning.rss_noise".into(), p.rss_noise >= 0.0, "must be >= 0".into())?;
        if let Some(t) = p.ransac_threshold_m {
            range("positioning.ransac_threshold_m".into(), t > 0.0, "must be > 0".into())?;
        }
        let mut ids = BTreeSet::new();
        for (i, b) in p.beacons.iter().enumerate() {
            range(format!("positioning.beacons[{i}].id"), ids.insert(b.id), format!("duplicate beacon id {}", b.id))?;
        }
        for (i, (_, position)) in self.beacon_positions()?.iter().enumerate() {
            if !self.inside_room(position) {
                return Err(ScenarioError::CrossRef {
                    path: format!("positioning.beacons[{i}]"),
                    message: "beacon lies outside the room".into(),
                });
            }
        }
        for (i, n) in p.nlos.iter().enumerate() {
            if !ids.contains(&n.beacon) {
                return Err(ScenarioError::CrossRef {
                    path: format!("positioning.nlos[{i}].beacon"),
                    message: format!("no beacon with id {}", n.beacon),
                });
            }
            range(format!("positioning.nlos[{i}].bias_m"), n.bias_m >= 0.0, "NLOS bias must be >= 0".into())?;
        }
        for (i, q) in p.points.iter().enumerate() {
            if !self.inside_room(&pos(q[0], q[1], q[2])) {
                return Err(ScenarioError::CrossRef {
                    path: format!("positioning.points[{i}]"),
                    message: "evaluation point lies outside the room".into(),
                });
            }
        }
        for (i, z) in p.eval_heights_m.iter().enumerate() {
            range(
                format!("positioning.eval_heights_m[{i}]"),
                (0.0..=self.room.height_m).contains(z),
                "height outside the room".into(),
            )?;
        }
        Ok(())
    }
}

/// Parse and validate scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| syntax_error(text, &e))?;
    from_value(toml::Value::Table(table))
}

/// Deserialize and validate an already parsed value tree.
pub fn from_value(value: toml::Value) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        let message = message.trim().to_string();
        if let Some(key) = quoted(&message, "unknown field `") {
            ScenarioError::UnknownKey { path: join_key(&path, key) }
        } else if let Some(key) = quoted(&message, "missing field `") {
            ScenarioError::MissingKey { path: join_key(&path, key) }
        } else {
            ScenarioError::Range { path, message }
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// The error path may or may not already end in the offending key.
fn join_key(path: &str, key: String) -> String {
    if path == "." || path.is_empty() {
        key
    } else if path == key || path.ends_with(&format!(".{key}")) {
        path.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn quoted(message: &str, prefix: &str) -> Option<String> {
    let rest = message.strip_prefix(prefix)?;
    Some(rest.split('`').next()?.to_string())
}

fn syntax_error(text: &str, e: &toml::de::Error) -> ScenarioError {
    let offset = e.span().map_or(0, |s| s.start).min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ScenarioError::Syntax { line, col, message: e.message().to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_scenario("[experiment]\nkind = \"sync_accuracy\"\n").unwrap();
        assert_eq!(s, Scenario::with_kind(ExperimentKind::SyncAccuracy));
        assert_eq!(s.experiment.seeds, vec![0]);
        assert_eq!(s.room.length_m, 8.0);
        assert_eq!(s.power.port_count_cap, 156);
    }

    #[test]
    fn round_trip() {
        let text = r#"
            [experiment]
            kind = "positioning_eval"
            seeds = [1, 2]
            [positioning]
            estimator = "ransac"
            nlos = [{ beacon = 1, bias_m = 1.5 }]
            ransac_threshold_m = 0.05
            [rover]
            obstacles = [{ min = [1.0, 1.0], max = [2.0, 2.0] }]
        "#;
        let s = parse_scenario(text).unwrap();
        let again = parse_scenario(&s.to_toml()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.hash(), again.hash());
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = parse_scenario("[experiment]\nkind = \"rover_plan\"\nseeds = [3]\n[room]\nlength_m = 9.0\nwidth_m = 5.0\n").unwrap();
        let b = parse_scenario("[room]\nwidth_m = 5.0\nlength_m = 9.0\n[experiment]\nseeds = [3]\nkind = \"rover_plan\"\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_scenario("[experiment]\nkind = \"rover_plan\"\nseeds = [4]\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn error_kinds() {
        match parse_scenario("[experiment]\nkind = \"sync_accuracy\"\n[sync]\nts_jiter_ns = 3\n") {
            Err(ScenarioError::UnknownKey { path }) => assert_eq!(path, "sync.ts_jiter_ns"),
            other => panic!("{other:?}"),
        }
        match parse_scenario("[experiment]\nkind = \"sync_accuracy\"\n[room\n") {
            Err(ScenarioError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_scenario("[experiment]\nkind = \"sync_accuracy\"\n[phy]\ncarrier_hz = 1e10\n") {
            Err(ScenarioError::Range { path, .. }) => assert_eq!(path, "phy.carrier_hz"),
            other => panic!("{other:?}"),
        }
        match parse_scenario("[experiment]\nkind = \"positioning_eval\"\n[[positioning.beacons]]\nid = 0\ntile = 999\n") {
            Err(ScenarioError::CrossRef { path, .. }) => assert_eq!(path, "positioning.beacons[0].tile"),
            other => panic!("{other:?}"),
        }
        match parse_scenario("[experiment]\nkind = \"positioning_eval\"\n[positioning]\nnlos = [{ beacon = 9, bias_m = 1.0 }]\n") {
            Err(ScenarioError::CrossRef { path, .. }) => assert_eq!(path, "positioning.nlos[0].beacon"),
            other => panic!("{other:?}"),
        }
        match parse_scenario("[room]\nlength_m = 3.0\n") {
            Err(ScenarioError::MissingKey { path }) => assert_eq!(path, "experiment"),
            other => panic!("{other:?}"),
        }
        match parse_scenario("[experiment]\nkind = \"dance\"\n") {
            Err(ScenarioError::Range { path, .. }) => assert_eq!(path, "experiment.kind"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tile_mounted_beacon_resolves() {
        let text = r#"
            [experiment]
            kind = "positioning_eval"
            [tiles]
            wall_a = 0
            wall_b = 0
            ceiling = 4
            floor = 0
            [[positioning.beacons]]
            id = 0
            tile = 2
            mount = [0, 0]
        "#;
        let s = parse_scenario(text).unwrap();
        let (_, p) = s.beacon_positions().unwrap()[0];
        assert!((p.z - 2.4).abs() < 1e-12);
    }

    #[test]
    fn eval_grid_shape() {
        let s = Scenario::with_kind(ExperimentKind::PositioningEval);
        assert_eq!(s.eval_points().len(), 16 * 8 * 3);
    }
}
