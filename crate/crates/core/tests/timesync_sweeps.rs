use weave::netsim::{LinkTemplate, NodeId, SimTime, TopologyKind};
use weave::stats;
use weave::timesync::sim::{run_sync, SwitchClock, SyncSimConfig};

const SEEDS: [u64; 4] = [0, 1, 2, 3];

fn base() -> SyncSimConfig {
    SyncSimConfig {
        topology: TopologyKind::Tree { fanout: 4 },
        tiles: 16,
        intervals: 160,
        link: LinkTemplate { jitter_sigma: SimTime::from_ns(20), ..LinkTemplate::default() },
        ..SyncSimConfig::default()
    }
}

// P99 of |error| pooled over every tile and seed.
fn pooled_p99(cfg: &SyncSimConfig) -> f64 {
    let abs: Vec<f64> = SEEDS
        .iter()
        .flat_map(|&s| run_sync(cfg, s).unwrap().all_converged())
        .map(f64::abs)
        .collect();
    stats::percentile(&abs, 99.0).unwrap()
}

fn assert_non_decreasing(label: &str, levels: &[f64], p99: &[f64]) {
    for k in 1..p99.len() {
        assert!(
            p99[k] >= p99[k - 1],
            "{label}: P99 fell from {} ps at {} to {} ps at {}",
            p99[k - 1],
            levels[k - 1],
            p99[k],
            levels[k]
        );
    }
}

#[test]
fn link_jitter_degrades_monotonically() {
    let levels = [0.0, 10.0, 100.0, 1000.0];
    let p99: Vec<f64> = levels
        .iter()
        .map(|&ns| {
            let link = LinkTemplate { jitter_sigma: SimTime::from_ns_f64(ns), ..LinkTemplate::default() };
            pooled_p99(&SyncSimConfig { link, ..base() })
        })
        .collect();
    assert_non_decreasing("link jitter", &levels, &p99);
}

#[test]
fn residence_jitter_degrades_monotonically_without_switch_support() {
    let levels = [0.0, 100.0, 1000.0, 10000.0];
    let p99: Vec<f64> = levels
        .iter()
        .map(|&ns| {
            let link = LinkTemplate { residence_jitter: SimTime::from_ns_f64(ns), ..base().link };
            pooled_p99(&SyncSimConfig { link, switch_clock: SwitchClock::None, ..base() })
        })
        .collect();
    assert_non_decreasing("residence jitter", &levels, &p99);
}

#[test]
fn timestamp_jitter_degrades_monotonically() {
    let levels = [0.1, 1.0, 10.0, 100.0];
    let p99: Vec<f64> = levels
        .iter()
        .map(|&ns| {
            // no link jitter, so timestamping is the only noise source
            let cfg = SyncSimConfig { ts_jitter: SimTime::from_ns_f64(ns), link: LinkTemplate::default(), ..base() };
            pooled_p99(&cfg)
        })
        .collect();
    assert_non_decreasing("timestamp jitter", &levels, &p99);
}

// Root, `switches` boundary clocks in a line, one tile at the end.
fn chain(switches: u32) -> TopologyKind {
    let nodes = switches + 2;
    TopologyKind::Explicit {
        nodes,
        switches: (1..=switches).collect(),
        edges: (0..nodes - 1).map(|i| (i, i + 1)).collect(),
    }
}

#[test]
fn boundary_chain_error_bounded_by_sum_of_hops() {
    for switches in 1..=4u32 {
        let cfg = SyncSimConfig { topology: chain(switches), tiles: 1, switch_clock: SwitchClock::Boundary, ..base() };
        let runs: Vec<_> = SEEDS.iter().map(|&s| run_sync(&cfg, s).unwrap()).collect();
        let tile = NodeId(switches + 1);
        let hop_p99: Vec<f64> = (1..=switches + 1)
            .map(|n| {
                let abs: Vec<f64> = runs.iter().flat_map(|r| r.hop_converged(NodeId(n))).map(f64::abs).collect();
                stats::percentile(&abs, 99.0).unwrap()
            })
            .collect();
        for r in &runs {
            // hop errors telescope to the end-to-end error
            let total: Vec<f64> = (0..r.converged(tile).len())
                .map(|k| (1..=switches + 1).map(|n| r.hop_converged(NodeId(n))[k]).sum())
                .collect();
            assert_eq!(total, r.converged(tile));
        }
        let abs: Vec<f64> = runs.iter().flat_map(|r| r.converged(tile)).map(f64::abs).collect();
        let end_to_end = stats::percentile(&abs, 99.0).unwrap();
        let bound: f64 = hop_p99.iter().sum();
        assert!(end_to_end <= bound, "{switches} switches: {end_to_end} ps > sum of hops {bound} ps ({hop_p99:?})");
    }
}
