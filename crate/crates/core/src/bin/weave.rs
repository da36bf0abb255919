use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use weave::facility::{build_room, Surface};
use weave::orchestrator::{
    audit_defaults, emit, load_scenario, run, sweep, sweep_csv, sweep_rows, Format, RunReport, Scenario,
    ScenarioError, SweepError,
};

const OUT_DIR_ENV: &str = "WEAVE_OUT_DIR";

#[derive(Parser)]
#[command(name = "weave", version, about = "Tile-based wireless facility simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's experiment for each seed and write metrics.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Run only this seed instead of the scenario's seed list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; falls back to $WEAVE_OUT_DIR, then `out`.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Parse and check a scenario, then print a facility summary.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run the scenario once per value of a numeric parameter.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Dotted key path, e.g. `sync.ts_jitter_ns` or `rover.footprint_m[0]`.
        #[arg(long)]
        param: String,
        /// Comma-separated, e.g. `0.1,1,10`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        values: Vec<f64>,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// List every default with its provenance and check it against the parser.
    AuditDefaults,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Scenario(e) => e.into(),
            SweepError::Run(e) => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, seed, out, format } => cmd_run(&scenario, seed, out, format),
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Sweep { scenario, param, values, out, format } => cmd_sweep(&scenario, &param, &values, out, format),
        Command::AuditDefaults => cmd_audit(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn out_dir(out: Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = out.unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn runs_table(reports: &[RunReport]) -> std::io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run_id", "seed", "experiment", "scenario_hash", "trace_hash"])?;
    for r in reports {
        let seed = r.seed.to_string();
        w.write_record([&r.run_id, &seed, r.experiment.as_str(), &r.scenario_hash, &r.trace_hash])?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))
}

fn cmd_run(path: &Path, seed: Option<u64>, out: Option<PathBuf>, format: Format) -> Result<(), Failure> {
    let scenario = load_scenario(path)?;
    let seeds = seed.map_or_else(|| scenario.experiment.seeds.clone(), |s| vec![s]);
    let dir = out_dir(out)?;
    let mut reports = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let report = run(&scenario, seed).map_err(|e| Failure::Runtime(e.to_string()))?;
        eprintln!("{}: {} records in {:.3} s", report.run_id, report.records.len(), report.wall_clock_s);
        reports.push(report);
    }
    let records: Vec<_> = reports.iter().flat_map(|r| r.records.iter().cloned()).collect();
    let metrics = emit(&records, format, &dir)?;
    fs::write(dir.join("runs.csv"), runs_table(&reports)?)?;
    println!("{}", metrics.display());
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    let scenario = load_scenario(path)?;
    print_summary(&scenario);
    Ok(())
}

fn print_summary(s: &Scenario) {
    println!("scenario {} ({})", s.hash(), s.experiment.kind.as_str());
    println!("room {} x {} x {} m", s.room.length_m, s.room.width_m, s.room.height_m);
    let spec = s.room_spec();
    match build_room(&spec) {
        Ok(tiles) => {
            let counts: Vec<String> =
                Surface::ALL.iter().map(|&sf| format!("{sf} {}", tiles.iter().filter(|t| t.surface == sf).count())).collect();
            println!("tiles {} ({})", tiles.len(), counts.join(", "));
        }
        Err(e) => println!("tiles {} requested, layout does not fit: {e}", spec.counts.total()),
    }
    // validate() already rejected infeasible plans
    if let Ok(plan) = s.power_plan() {
        println!(
            "power {} ports x {} W = {} W of {} W ({} W headroom, {} port cap)",
            plan.draws_w.len(),
            s.power.per_tile_draw_w,
            plan.total_w,
            plan.limits.aggregate_cap_w,
            plan.headroom_w(),
            plan.limits.port_count_cap
        );
    }
    let adc = s.adc();
    println!(
        "daq {} channels, {} bit at {} S/s, LSB {:.6e} V",
        adc.channels,
        adc.bits,
        adc.sample_rate_hz,
        adc.lsb_v()
    );
    println!("seeds {:?}", s.experiment.seeds);
}

fn cmd_sweep(path: &Path, param: &str, values: &[f64], out: Option<PathBuf>, format: Format) -> Result<(), Failure> {
    let scenario = load_scenario(path)?;
    let runs = sweep(&scenario, param, values)?;
    let dir = out_dir(out)?;
    let records: Vec<_> = runs.iter().flat_map(|r| r.report.records.iter().cloned()).collect();
    emit(&records, format, &dir)?;
    let reports: Vec<_> = runs.iter().map(|r| r.report.clone()).collect();
    fs::write(dir.join("runs.csv"), runs_table(&reports)?)?;
    let table = sweep_csv(&sweep_rows(param, &runs))?;
    fs::write(dir.join("sweep.csv"), &table)?;
    print!("{}", String::from_utf8_lossy(&table));
    Ok(())
}

fn cmd_audit() -> Result<(), Failure> {
    match audit_defaults() {
        Ok(lines) => {
            for l in lines {
                println!("{:<36} {:<24} {:<8} {}", l.path, l.value, l.provenance.as_str(), l.note);
            }
            Ok(())
        }
        Err(m) => Err(Failure::Runtime(format!(
            "default catalog out of date; undocumented: {:?}, stale: {:?}",
            m.undocumented, m.stale
        ))),
    }
}
