use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::warn;
use serde_json::json;

use ctxorder::harness::{run_scenario, run_sweep, spearman, HarnessError, ScenarioParams, SweepAxis, SweepResult};
use ctxorder::{oracle, report, trace, ConstraintSpec};

mod plot;

/// Simulate and check ordered global activities in the smart-lock scenario.
#[derive(Parser)]
#[command(name = "ctxorder", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its result as JSON.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the message trace of the run to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep one parameter over a grid and several seeds.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        /// Comma-separated axis values; defaults to the axis' standard grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Comma-separated seeds, or a half-open range such as `0..10`.
        #[arg(long, default_value = "0..10", value_parser = parse_seeds)]
        seeds: SeedList,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Replay the checking messages of a recorded trace.
    CheckTrace {
        path: PathBuf,
        #[arg(long, default_value = "AND(1,2) < AND(3,4)")]
        constraint: String,
    },
    /// Compare the checker with a brute-force detector on random small runs.
    Selftest {
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value = "AND(1,2) < AND(3,4)")]
    constraint: String,
    /// Simulated seconds.
    #[arg(long, default_value_t = ScenarioParams::default().lifetime)]
    lifetime: f64,
    #[arg(long, default_value_t = ScenarioParams::default().mean_stay_in)]
    mean_stay_in: f64,
    #[arg(long, default_value_t = ScenarioParams::default().mean_stay_out)]
    mean_stay_out: f64,
    #[arg(long, default_value_t = ScenarioParams::default().update_interval)]
    update_interval: f64,
    #[arg(long, default_value_t = ScenarioParams::default().mean_delay)]
    mean_delay: f64,
    /// Seconds between leaving one place and entering the other.
    #[arg(long, default_value_t = ScenarioParams::default().transit)]
    transit: f64,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "CTXORDER_OUT", default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad seed {p:?}")))
        .collect::<Result<_, _>>()
        .map(SeedList)
}

/// Errors that exit with status 2: bad input rather than a failed run.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

impl ScenarioArgs {
    fn resolve(&self, seed: u64) -> Result<(ScenarioParams, ConstraintSpec)> {
        let spec = ConstraintSpec::parse(&self.constraint)
            .map_err(|e| input_error(format!("invalid constraint {:?}: {e}", self.constraint)))?;
        let params = ScenarioParams {
            lifetime: self.lifetime,
            mean_stay_in: self.mean_stay_in,
            mean_stay_out: self.mean_stay_out,
            update_interval: self.update_interval,
            mean_delay: self.mean_delay,
            transit: self.transit,
            seed,
        };
        params.validate().map_err(|e| input_error(e.to_string()))?;
        if spec.len() != 2 {
            return Err(input_error(HarnessError::IncompatibleConstraint(spec.len()).to_string()));
        }
        Ok((params, spec))
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn cmd_run(scenario: &ScenarioArgs, seed: u64, trace_path: Option<&Path>, out: &Path) -> Result<bool> {
    let (params, spec) = scenario.resolve(seed)?;
    let run = run_scenario(&params, &spec)?;
    let r = run.result;
    println!("num_oga={} num_phy={} probability={}", r.num_oga, r.num_phy, r.probability);
    if r.num_phy == 0 {
        println!("note: no complete cycle fits in the lifetime, probability reported as 0");
    }
    for v in &run.verdict.violations {
        eprintln!("safety violation: {v}");
    }
    let detections: Vec<u64> = spec
        .activities()
        .iter()
        .map(|ga| run.log.detections.iter().filter(|d| d.occurrence.ga_id == ga.ga_id).count() as u64)
        .collect();
    let record = json!({
        "num_oga": r.num_oga,
        "num_phy": r.num_phy,
        "probability": r.probability,
        "constraint": spec.to_string(),
        "params": params,
        "detections": detections,
        "discarded": run.discarded,
        "messages": run.log.messages.len(),
        "dropped_events": run.log.dropped,
        "comparisons": run.counters,
        "safety_violations": run.verdict.violations.len(),
    });
    ensure_dir(out)?;
    let json_path = out.join("result.json");
    fs::write(&json_path, serde_json::to_string_pretty(&record)? + "\n")
        .with_context(|| format!("writing {}", json_path.display()))?;
    if let Some(path) = trace_path {
        fs::write(path, trace::export_trace(&run.log)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(run.verdict.is_safe())
}

fn cmd_sweep(scenario: &ScenarioArgs, axis: SweepAxis, grid: Option<&[f64]>, seeds: &[u64], out: &Path) -> Result<bool> {
    let (base, spec) = scenario.resolve(0)?;
    let grid = grid.map(<[f64]>::to_vec).unwrap_or_else(|| axis.default_grid());
    if grid.is_empty() {
        return Err(input_error("sweep grid is empty"));
    }
    if seeds.is_empty() {
        return Err(input_error("sweep needs at least one seed"));
    }
    for &v in &grid {
        axis.apply(&base, v).validate().map_err(|e| input_error(format!("grid value {v}: {e}")))?;
    }
    let result = run_sweep(&base, &spec, axis, &grid, seeds)?;
    ensure_dir(out)?;
    let stem = format!("sweep-{axis}");
    let write = |name: String, body: String| -> Result<()> {
        let path = out.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write(format!("{stem}.csv"), report::rows_csv(&result))?;
    write(format!("{stem}-summary.csv"), report::summary_csv(&result))?;
    let svg = out.join(format!("{stem}.svg"));
    plot::probability_curve(&result, &svg).with_context(|| format!("plotting {}", svg.display()))?;
    print_summary(&result);
    for v in &result.violations {
        eprintln!("safety violation: {v}");
    }
    Ok(result.violations.is_empty())
}

fn print_summary(result: &SweepResult) {
    println!("{:>12} {:>4} {:>10} {:>10}", result.axis.name(), "n", "mean", "std");
    for a in &result.aggregates {
        println!(
            "{:>12} {:>4} {:>10.4} {:>10.4}",
            a.axis_value, a.n, a.mean_probability, a.std_probability
        );
    }
    let xs: Vec<f64> = result.aggregates.iter().map(|a| a.axis_value).collect();
    match spearman(&xs, &result.means()) {
        Some(rho) => println!("spearman rho = {rho:.4}"),
        None => println!("spearman rho undefined"),
    }
}

fn cmd_check_trace(path: &Path, constraint: &str) -> Result<bool> {
    let spec =
        ConstraintSpec::parse(constraint).map_err(|e| input_error(format!("invalid constraint {constraint:?}: {e}")))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = trace::parse_trace(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let report = trace::replay(&records, &spec).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    for w in &report.warnings {
        warn!("sequence gap: {w}");
    }
    print!("{}", report.render(&spec));
    Ok(true)
}

fn cmd_selftest(count: u64, seed: u64) -> Result<bool> {
    let failures = oracle::equivalence_suite(seed, count)?;
    for (s, diffs) in &failures {
        for d in diffs {
            println!("seed {s}: {d}");
        }
    }
    if failures.is_empty() {
        println!("PASS oracle equivalence: {count} micro traces, 0 mismatches");
    } else {
        println!("FAIL oracle equivalence: {} of {count} micro traces mismatched", failures.len());
    }
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run {
            scenario,
            seed,
            trace,
            output,
        } => cmd_run(scenario, *seed, trace.as_deref(), &output.out),
        Command::Sweep {
            scenario,
            axis,
            grid,
            seeds,
            output,
        } => cmd_sweep(scenario, *axis, grid.as_deref(), &seeds.0, &output.out),
        Command::CheckTrace { path, constraint } => cmd_check_trace(path, constraint),
        Command::Selftest { count, seed } => cmd_selftest(*count, *seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if e.is::<InputError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
