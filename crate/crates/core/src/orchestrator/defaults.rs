//! Where every default value comes from.

use std::collections::BTreeMap;

use serde::Serialize;

use super::scenario::{ExperimentKind, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Figure stated for the physical facility.
    Facility,
    /// Chosen for this simulator.
    Decision,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Facility => "facility",
            Provenance::Decision => "decision",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DefaultEntry {
    pub path: &'static str,
    pub provenance: Provenance,
    /// Unset by default (an optional key).
    pub optional: bool,
    pub note: &'static str,
}

const fn facility(path: &'static str, note: &'static str) -> DefaultEntry {
    DefaultEntry { path, provenance: Provenance::Facility, optional: false, note }
}

const fn decision(path: &'static str, note: &'static str) -> DefaultEntry {
    DefaultEntry { path, provenance: Provenance::Decision, optional: false, note }
}

const fn optional(path: &'static str, note: &'static str) -> DefaultEntry {
    DefaultEntry { path, provenance: Provenance::Decision, optional: true, note }
}

pub const DEFAULTS: &[DefaultEntry] = &[
    facility("room.length_m", "room is 8 m long"),
    facility("room.width_m", "room is 4 m wide"),
    facility("room.height_m", "2.4 m ceiling"),
    decision("room.alignment", "tile block starts at the surface corner"),
    facility("tiles.wall_a", "28 tiles per long wall"),
    facility("tiles.wall_b", "28 tiles per long wall"),
    facility("tiles.ceiling", "42 ceiling tiles"),
    facility("tiles.floor", "52 floor tiles"),
    facility("power.port_cap_w", "90 W PoE per tile"),
    facility("power.aggregate_cap_w", "about 9 kW midspan budget"),
    facility("power.port_count_cap", "midspans support 156 powered devices"),
    facility("power.powered_tiles", "140 installed tiles"),
    decision("power.per_tile_draw_w", "typical, not peak, tile draw"),
    facility("daq.sample_rate_hz", "1.25 MS/s per channel"),
    facility("daq.bits", "16-bit converters"),
    decision("daq.full_scale_v", "+-1 V input span"),
    facility("daq.channels", "192 differential channels"),
    decision("topology.kind", "two-level switch tree"),
    decision("topology.fanout", "48-port access switches"),
    facility("topology.tiles", "140 installed tiles"),
    decision("topology.link_delay_ns", "about 100 m of cable"),
    decision("topology.link_jitter_ns", "noise-free links"),
    decision("topology.residence_ns", "store-and-forward residence"),
    decision("topology.residence_jitter_ns", "deterministic residence"),
    decision("topology.asymmetry_ns", "symmetric links"),
    decision("topology.switch_clock", "transparent clocks in every switch"),
    decision("sync.mode", "plain two-way message sync"),
    decision("sync.sync_interval_ms", "common PTP profile rate"),
    decision("sync.intervals", "25 s of simulated time"),
    decision("sync.settle_intervals", "servo settling excluded from statistics"),
    decision("sync.ts_jitter_ns", "hardware timestamp noise"),
    decision("sync.known_asymmetry_ns", "no declared asymmetry"),
    decision("sync.dedicated_error_ns", "ideal PPS distribution"),
    decision("sync.servo_kp", "PI servo proportional gain"),
    decision("sync.servo_ki", "PI servo integral gain"),
    decision("sync.initial_offset_spread_ns", "free-running start within +-10 us"),
    decision("sync.initial_skew_spread_ppm", "crystal tolerance +-5 ppm"),
    decision("sync.drift_rw_sigma", "no skew wander"),
    decision("phy.carrier_hz", "mid-band carrier inside the radio range"),
    decision("phy.model", "free-space propagation"),
    decision("phy.exponent", "free-space exponent"),
    decision("phy.reference_distance_m", "1 m reference distance"),
    facility("phy.tx_power_dbm", "radio maximum of 20 dBm"),
    decision("phy.chain_gain_min", "RF chain magnitude spread"),
    decision("phy.chain_gain_max", "RF chain magnitude spread"),
    decision("phy.pilot_noise_sigma", "noise-free pilots"),
    decision("phy.efficiency", "RF-to-DC conversion efficiency"),
    facility("phy.energy_target_j", "362.45 uJ per sensing cycle"),
    decision("phy.device_m", "device near the room centre"),
    decision("phy.transmit_surface", "ceiling tiles radiate"),
    decision("phy.transmitters", "16 radiating tiles"),
    decision("positioning.technology", "acoustic ranging"),
    decision("positioning.estimator", "least squares"),
    decision("positioning.toa_sigma_s", "noise-free timing"),
    decision("positioning.clock_bias_s", "RF trigger removes the device bias"),
    decision("positioning.beacons", "four fixed beacons at room corners"),
    decision("positioning.nlos", "no NLOS links"),
    decision("positioning.ransac_iterations", "RANSAC iteration budget"),
    optional("positioning.ransac_threshold_m", "unset means three times the range sigma"),
    decision("positioning.ransac_sample", "minimal 3D sample plus one"),
    decision("positioning.eval_spacing_m", "evaluation grid pitch"),
    decision("positioning.eval_heights_m", "evaluation heights"),
    decision("positioning.points", "grid instead of explicit points"),
    decision("positioning.lambertian_order", "60 degree half-power LEDs"),
    decision("positioning.led_power_w", "1 W optical power"),
    decision("positioning.receiver_area_m2", "1 cm2 photodiode"),
    decision("positioning.rss_noise", "noise-free RSS"),
    decision("rover.spacing_m", "1 m sampling grid"),
    decision("rover.heights_m", "single sampling height"),
    decision("rover.obstacles", "empty room"),
    decision("rover.footprint_m", "0.5 x 0.5 m footprint"),
    decision("rover.drive_power_w", "drive power draw"),
    decision("rover.speed_m_s", "cruise speed"),
    facility("rover.lift_min_m", "lift reaches down to 55 cm"),
    facility("rover.lift_max_m", "lift reaches up to 185 cm"),
    facility("rover.sensor_min_m", "ranging sensor minimum 2 cm"),
    facility("rover.sensor_max_m", "ranging sensor maximum 4 m"),
    facility("rover.sensor_resolution_m", "3 mm ranging resolution"),
    facility("rover.localization_precision_m", "2 cm localization precision"),
    facility("rover.battery_wh", "170 Wh battery pack"),
    decision("experiment.seeds", "single seed 0"),
    optional("experiment.duration_s", "unset means sync.intervals, or 1 s of harvesting"),
];

#[derive(Debug, Clone, Serialize)]
pub struct AuditLine {
    pub path: String,
    pub value: String,
    pub provenance: Provenance,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditMismatch {
    /// Parser defaults without a catalog entry.
    pub undocumented: Vec<String>,
    /// Catalog entries the parser does not produce.
    pub stale: Vec<String>,
}

pub fn provenance(path: &str) -> Option<&'static DefaultEntry> {
    DEFAULTS.iter().find(|e| e.path == path)
}

fn leaves(prefix: &str, value: &toml::Value, out: &mut BTreeMap<String, String>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaves(&path, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

/// Compares the catalog against the defaults the parser actually fills in.
pub fn audit_defaults() -> Result<Vec<AuditLine>, AuditMismatch> {
    let value = toml::Value::try_from(Scenario::with_kind(ExperimentKind::SyncAccuracy)).expect("defaults serialize");
    let mut actual = BTreeMap::new();
    leaves("", &value, &mut actual);
    actual.remove("experiment.kind");

    let mut mismatch = AuditMismatch::default();
    for path in actual.keys() {
        if provenance(path).is_none() {
            mismatch.undocumented.push(path.clone());
        }
    }
    for e in DEFAULTS {
        if actual.contains_key(e.path) == e.optional {
            mismatch.stale.push(e.path.to_string());
        }
    }
    if mismatch != AuditMismatch::default() {
        return Err(mismatch);
    }
    Ok(DEFAULTS
        .iter()
        .map(|e| AuditLine {
            path: e.path.to_string(),
            value: actual.get(e.path).cloned().unwrap_or_else(|| "unset".into()),
            provenance: e.provenance,
            note: e.note.to_string(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_matches_parser() {
        let lines = audit_defaults().unwrap();
        assert_eq!(lines.len(), DEFAULTS.len());
        let battery = lines.iter().find(|l| l.path == "rover.battery_wh").unwrap();
        assert_eq!(battery.value, "170.0");
        assert_eq!(battery.provenance, Provenance::Facility);
        assert_eq!(provenance("sync.servo_kp").unwrap().provenance, Provenance::Decision);
    }
}
