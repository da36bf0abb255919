use weave::orchestrator::*;

fn scenario(text: &str) -> Scenario {
    parse_scenario(text).unwrap()
}

fn small_sync() -> Scenario {
    scenario(
        r#"
[topology]
fanout = 4
tiles = 16

[sync]
intervals = 120

[experiment]
kind = "sync_accuracy"
seeds = [0, 1, 2]
"#,
    )
}

// Mean of the headline metric over seeds, one entry per swept value.
fn per_value(runs: &[SweepRun], values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let hits: Vec<f64> = runs
                .iter()
                .filter(|r| r.value == v)
                .map(|r| r.report.metric(headline_metric(r.report.experiment)).unwrap())
                .collect();
            hits.iter().sum::<f64>() / hits.len() as f64
        })
        .collect()
}

#[test]
fn timestamp_jitter_sweep_is_monotone() {
    let s = small_sync();
    let values = [0.1, 1.0, 10.0, 100.0];
    let runs = sweep(&s, "sync.ts_jitter_ns", &values).unwrap();
    assert_eq!(runs.len(), values.len() * s.experiment.seeds.len());
    for seed in &s.experiment.seeds {
        let p99: Vec<f64> = runs
            .iter()
            .filter(|r| r.report.seed == *seed)
            .map(|r| r.report.metric("offset_error_p99_abs").unwrap())
            .collect();
        assert!(p99.windows(2).all(|w| w[1] >= w[0]), "seed {seed}: {p99:?}");
    }
    let rows = sweep_rows("sync.ts_jitter_ns", &runs);
    assert_eq!(rows.len(), runs.len());
    let table = sweep_csv(&rows).unwrap();
    assert_eq!(table.iter().filter(|&&b| b == b'\n').count(), rows.len() + 1);
}

#[test]
fn dedicated_error_sweep_degrades_gain() {
    let s = scenario(
        r#"
[topology]
fanout = 4
tiles = 16

[sync]
mode = "dedicated"

[experiment]
kind = "coherent_gain_vs_sync"
seeds = [0, 1, 2]
"#,
    );
    let values = [0.0, 0.005, 0.02, 0.05];
    let gains = per_value(&sweep(&s, "sync.dedicated_error_ns", &values).unwrap(), &values);
    assert!((gains[0] - 256.0).abs() < 1e-9, "{gains:?}");
    assert!(gains.windows(2).all(|w| w[1] <= w[0]), "{gains:?}");
}

#[test]
fn single_value_sweep_matches_run() {
    let s = small_sync();
    let runs = sweep(&s, "sync.ts_jitter_ns", &[8.0]).unwrap();
    for r in &runs {
        let direct = run(&s, r.report.seed).unwrap();
        assert_eq!(r.report.records, direct.records);
        assert_eq!(r.report.trace_hash, direct.trace_hash);
        assert_eq!(r.report.run_id, direct.run_id);
    }
}

#[test]
fn swept_parameters_are_revalidated() {
    let s = small_sync();
    assert!(matches!(sweep(&s, "sync.no_such_key", &[1.0]), Err(SweepError::Scenario(ScenarioError::UnknownParameter { .. }))));
    assert!(matches!(sweep(&s, "sync.mode", &[1.0]), Err(SweepError::Scenario(ScenarioError::UnknownParameter { .. }))));
    assert!(matches!(sweep(&s, "topology.tiles", &[2.5]), Err(SweepError::Scenario(ScenarioError::Range { .. }))));
    assert!(matches!(sweep(&s, "sync.ts_jitter_ns", &[-1.0]), Err(SweepError::Scenario(ScenarioError::Range { .. }))));
    assert!(sweep(&s, "sync.ts_jitter_ns", &[]).unwrap().is_empty());
}

#[test]
fn array_elements_are_addressable() {
    let s = scenario("[experiment]\nkind = \"rover_plan\"\n");
    let runs = sweep(&s, "rover.footprint_m[0]", &[0.4, 0.6]).unwrap();
    assert_eq!(runs.len(), 2 * s.experiment.seeds.len());
    let varied = with_parameter(&s, "rover.footprint_m[0]", 0.6).unwrap();
    assert_eq!(varied.rover.footprint_m[0], 0.6);
    assert_eq!(varied.rover.footprint_m[1], s.rover.footprint_m[1]);
}
