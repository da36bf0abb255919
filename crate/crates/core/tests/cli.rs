use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use weave::orchestrator::{load_scenario, read_csv, read_jsonl};

const SMALL: &str = r#"
[topology]
fanout = 4
tiles = 8

[sync]
intervals = 80

[experiment]
kind = "sync_accuracy"
seeds = [0, 1]
"#;

fn weave(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weave"))
        .args(args)
        .current_dir(dir)
        .env_remove("WEAVE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shipped() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn run_is_byte_identical_across_processes() {
    let tmp = TempDir::new().unwrap();
    let sc = write(tmp.path(), "s.toml", SMALL);
    let sc = sc.to_str().unwrap();
    let a = weave(&["run", "--scenario", sc, "--out", "a"], tmp.path());
    let b = weave(&["run", "--scenario", sc, "--out", "b"], tmp.path());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0), "{}", stderr(&b));
    for f in ["metrics.csv", "runs.csv"] {
        let x = fs::read(tmp.path().join("a").join(f)).unwrap();
        let y = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let records = read_csv(&fs::read(tmp.path().join("a/metrics.csv")).unwrap()).unwrap();
    assert!(records.iter().any(|r| r.seed == 0) && records.iter().any(|r| r.seed == 1));
    let runs = fs::read_to_string(tmp.path().join("a/runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 3);
    assert!(runs.starts_with("run_id,seed,experiment,scenario_hash,trace_hash"));
    assert!(stdout(&a).trim_end().ends_with("metrics.csv"));
}

#[test]
fn single_seed_and_jsonl() {
    let tmp = TempDir::new().unwrap();
    let sc = write(tmp.path(), "s.toml", SMALL);
    let o = weave(&["run", "--scenario", sc.to_str().unwrap(), "--seed", "7", "--out", "o", "--format", "jsonl"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let records = read_jsonl(&fs::read(tmp.path().join("o/metrics.jsonl")).unwrap()).unwrap();
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| r.seed == 7));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let tmp = TempDir::new().unwrap();
    let sc = write(tmp.path(), "s.toml", SMALL);
    let target = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_weave"))
        .args(["run", "--scenario", sc.to_str().unwrap(), "--seed", "0"])
        .current_dir(tmp.path())
        .env("WEAVE_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(target.join("metrics.csv").is_file());
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("typo.toml", "[sync]\nts_jiter_ns = 1.0\n", "sync.ts_jiter_ns"),
        ("syntax.toml", "[sync\n", "line"),
        ("range.toml", "[sync]\nts_jitter_ns = -1.0\n", "sync.ts_jitter_ns"),
        ("missing.toml", "[sync]\n", "experiment"),
    ];
    for (name, text, needle) in cases {
        let experiment = if name == "missing.toml" { "" } else { "[experiment]\nkind = \"sync_accuracy\"\n" };
        let sc = write(tmp.path(), name, &format!("{text}{experiment}"));
        for cmd in ["run", "validate"] {
            let o = weave(&[cmd, "--scenario", sc.to_str().unwrap()], tmp.path());
            assert_eq!(o.status.code(), Some(2), "{name} {cmd}: {}", stderr(&o));
            assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
        }
    }
    let o = weave(&["validate", "--scenario", "absent.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = TempDir::new().unwrap();
    let sc = write(tmp.path(), "s.toml", SMALL);
    write(tmp.path(), "blocker", "");
    let o = weave(&["run", "--scenario", sc.to_str().unwrap(), "--seed", "0", "--out", "blocker/sub"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn validate_prints_summary() {
    let tmp = TempDir::new().unwrap();
    let sc = write(tmp.path(), "s.toml", SMALL);
    let o = weave(&["validate", "--scenario", sc.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let hash = load_scenario(&sc).unwrap().hash();
    let out = stdout(&o);
    assert!(out.starts_with(&format!("scenario {hash} (sync_accuracy)")), "{out}");
    for key in ["room ", "tiles ", "power ", "daq ", "seeds [0, 1]"] {
        assert!(out.contains(key), "missing {key:?} in {out}");
    }
}

#[test]
fn shipped_scenarios_validate() {
    let tmp = TempDir::new().unwrap();
    let mut n = 0;
    for entry in fs::read_dir(shipped()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let o = weave(&["validate", "--scenario", p.to_str().unwrap()], tmp.path());
            assert_eq!(o.status.code(), Some(0), "{}: {}", p.display(), stderr(&o));
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn sweep_writes_one_row_per_value_and_seed() {
    let tmp = TempDir::new().unwrap();
    let sc = write(tmp.path(), "s.toml", SMALL);
    let o = weave(
        &["sweep", "--scenario", sc.to_str().unwrap(), "--param", "sync.ts_jitter_ns", "--values", "0.1,1,10", "--out", "sw"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(tmp.path().join("sw/sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 3 * 2);
    assert_eq!(stdout(&o), table);
    let runs = fs::read_to_string(tmp.path().join("sw/runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 3 * 2);

    let neg = weave(&["sweep", "--scenario", sc.to_str().unwrap(), "--param", "sync.ts_jitter_ns", "--values", "-1,2"], tmp.path());
    assert_eq!(neg.status.code(), Some(2), "{}", stderr(&neg));
    assert!(stderr(&neg).contains("sync.ts_jitter_ns"), "{}", stderr(&neg));

    let bad = weave(&["sweep", "--scenario", sc.to_str().unwrap(), "--param", "sync.bogus", "--values", "1"], tmp.path());
    assert_eq!(bad.status.code(), Some(2), "{}", stderr(&bad));
}

#[test]
fn audit_defaults_lists_provenance() {
    let tmp = TempDir::new().unwrap();
    let o = weave(&["audit-defaults"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("sync.ts_jitter_ns")));
    assert!(out.lines().all(|l| l.contains(" facility ") || l.contains(" decision ")), "{out}");
}
