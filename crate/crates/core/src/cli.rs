//! Command-line front end.
//!
//! ```text
//! ghzgrid simulate --config run.json [--trials N] [--seed S] [--out FILE] [--json] [--trace]
//! ghzgrid sweep    --config sweep.json ...
//! ghzgrid cycles   --config cycles.json ...
//! ghzgrid validate [--seed S] [--samples N]
//! ```
//!
//! Exit status is 0 on success, 1 when a validation suite fails and 2 for
//! configuration errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::montecarlo::{
    cycle_fraction_study, envelope_sweep, point_key, trial_rng, CycleRow, SimulationSpec, SweepAxes, SweepTable,
};
use crate::network::{Coord, GridSpec, RegionLevel};
use crate::protocol::{KHop, ProtocolConfig, RoundRunner, Scheduler};
use crate::validate::{run_validation, Fault, ValidationOptions};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Header of `simulate` output.
pub const SIMULATE_HEADER: &str = "fidelity,link_prob,grid,region,k,mean_rate,std_err,abort_frac";
/// Header of `sweep` output.
pub const SWEEP_HEADER: &str =
    "fidelity,link_prob,grid,alice,bob,distance,region,k,scheduler,t,mean_rate,std_err,abort_frac,mean_swaps,raw_mean_ci,envelope";
/// Header of `cycles` output.
pub const CYCLES_HEADER: &str = "n,p,cycle_len,fraction_pre,fraction_post";

#[derive(Parser, Debug)]
#[command(name = "ghzgrid", version, about = "Entanglement routing with GHZ swaps on a noisy grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rate statistics for every point of a configuration.
    Simulate(RunArgs),
    /// Points plus the envelope over protocol variants.
    Sweep(RunArgs),
    /// Polygon fractions per grid size, link probability and polygon length.
    Cycles(RunArgs),
    /// Oracle suites; exits 1 if any fails.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<u64>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
    /// Log the first round of every point to stderr.
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = ValidationOptions::default().seed)]
    seed: u64,
    /// Ladder samples per length.
    #[arg(long, default_value_t = ValidationOptions::default().ladder_samples)]
    samples: u64,
    /// Corrupt one coefficient of every closed-form state (self-test).
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// Runs the command line and returns the exit status.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a, false),
        Command::Sweep(a) => simulate(&a, true),
        Command::Cycles(a) => cycles(&a),
        Command::Validate(a) => return validate(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn read_object(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::config("config", "expected a JSON object")),
        Err(e) => Err(Error::config("config", format!("{}: {e}", path.display()))),
    }
}

fn check_keys(map: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    match map.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::config(k.as_str(), format!("unknown key; expected one of {}", allowed.join(", ")))),
        None => Ok(()),
    }
}

/// A scalar or an array of scalars, duplicates dropped with a warning.
fn axis<T: PartialEq + std::fmt::Debug>(
    map: &Map<String, Value>,
    field: &str,
    parse: impl Fn(&Value) -> Option<T>,
    expected: &str,
) -> Result<Option<Vec<T>>> {
    let Some(v) = map.get(field) else { return Ok(None) };
    let items: Vec<&Value> = match v {
        Value::Array(a) => a.iter().collect(),
        other => vec![other],
    };
    if items.is_empty() {
        return Err(Error::config(field, "axis has no values"));
    }
    let mut out: Vec<T> = Vec::new();
    for item in items {
        let x = parse(item).ok_or_else(|| Error::config(field, format!("expected {expected}, got {item}")))?;
        if out.contains(&x) {
            eprintln!("warning: duplicate value {x:?} in `{field}` ignored");
        } else {
            out.push(x);
        }
    }
    Ok(Some(out))
}

fn required<T>(field: &str, v: Option<T>) -> Result<T> {
    v.ok_or_else(|| Error::config(field, "missing required key"))
}

fn as_usize(v: &Value) -> Option<usize> {
    v.as_u64().and_then(|x| usize::try_from(x).ok())
}

fn as_setting(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => n.as_u64().map(|x| x.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn as_pair(v: &Value) -> Option<(usize, usize)> {
    match v.as_array()?.as_slice() {
        [r, c] => Some((as_usize(r)?, as_usize(c)?)),
        _ => None,
    }
}

fn as_consumers(v: &Value) -> Option<(Coord, Coord)> {
    match v.as_array()?.as_slice() {
        [a, b] => {
            let (a, b) = (as_pair(a)?, as_pair(b)?);
            Some((Coord::new(a.0, a.1), Coord::new(b.0, b.1)))
        }
        _ => None,
    }
}

fn scalar<T>(map: &Map<String, Value>, field: &str, parse: impl Fn(&Value) -> Option<T>, expected: &str) -> Result<Option<T>> {
    match map.get(field) {
        None => Ok(None),
        Some(v) => parse(v)
            .map(Some)
            .ok_or_else(|| Error::config(field, format!("expected {expected}, got {v}"))),
    }
}

const RUN_KEYS: &[&str] = &[
    "grid",
    "consumers",
    "link_prob",
    "fidelity",
    "k",
    "region",
    "scheduler",
    "distill_rounds",
    "trials",
    "seed",
];

/// Reads an experiment file and applies command-line overrides.
pub fn load_simulation(path: &Path, trials: Option<u64>, seed: Option<u64>) -> Result<SimulationSpec> {
    let map = read_object(path)?;
    check_keys(&map, RUN_KEYS)?;
    let sizes = required("grid", axis(&map, "grid", as_usize, "a grid size")?)?;
    // one pair of coordinates, or a list of pairs
    let consumers = match map.get("consumers") {
        None => return Err(Error::config("consumers", "missing required key")),
        Some(v) => match as_consumers(v) {
            Some(c) => vec![c],
            None => required("consumers", axis(&map, "consumers", as_consumers, "[[row, col], [row, col]]")?)?,
        },
    };
    let mut grid = Vec::new();
    for &n in &sizes {
        for &(a, b) in &consumers {
            grid.push(GridSpec::new(n, a, b)?);
        }
    }
    let fidelity = required("fidelity", axis(&map, "fidelity", Value::as_f64, "a number")?)?;
    let link_prob = required("link_prob", axis(&map, "link_prob", Value::as_f64, "a number")?)?;
    let k_hop = axis(&map, "k", as_setting, "an integer or \"global\"")?
        .unwrap_or_else(|| vec!["global".into()])
        .iter()
        .map(|s| s.parse::<KHop>())
        .collect::<Result<Vec<_>>>()?;
    let region = axis(&map, "region", as_setting, "an integer or \"all\"")?
        .unwrap_or_else(|| vec!["all".into()])
        .iter()
        .map(|s| s.parse::<RegionLevel>())
        .collect::<Result<Vec<_>>>()?;
    let scheduler = axis(&map, "scheduler", |v| v.as_str().map(str::to_owned), "a scheduler name")?
        .unwrap_or_else(|| vec!["consumer-greedy".into()])
        .iter()
        .map(|s| s.parse::<Scheduler>())
        .collect::<Result<Vec<_>>>()?;
    let distill_rounds = axis(&map, "distill_rounds", as_usize, "a positive integer")?.unwrap_or_else(|| vec![1]);
    let trials = match trials {
        Some(t) => t,
        None => required("trials", scalar(&map, "trials", Value::as_u64, "a positive integer")?)?,
    };
    let master_seed = match seed {
        Some(s) => s,
        None => scalar(&map, "seed", Value::as_u64, "a non-negative integer")?.unwrap_or(0),
    };
    let spec = SimulationSpec {
        axes: SweepAxes {
            fidelity,
            link_prob,
            grid,
            region,
            k_hop,
            scheduler,
            distill_rounds,
        },
        trials,
        master_seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Polygon study parameters: grid sizes, link probabilities, k values,
/// trials and seed.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleStudySpec {
    pub sizes: Vec<usize>,
    pub link_probs: Vec<f64>,
    pub ks: Vec<usize>,
    pub trials: u64,
    pub master_seed: u64,
}

pub fn load_cycle_study(path: &Path, trials: Option<u64>, seed: Option<u64>) -> Result<CycleStudySpec> {
    let map = read_object(path)?;
    check_keys(&map, &["grid", "link_prob", "k", "trials", "seed"])?;
    let trials = match trials {
        Some(t) => t,
        None => required("trials", scalar(&map, "trials", Value::as_u64, "a positive integer")?)?,
    };
    Ok(CycleStudySpec {
        sizes: required("grid", axis(&map, "grid", as_usize, "a grid size")?)?,
        link_probs: required("link_prob", axis(&map, "link_prob", Value::as_f64, "a number")?)?,
        ks: axis(&map, "k", as_usize, "a positive integer")?.unwrap_or_else(|| vec![1]),
        trials,
        master_seed: match seed {
            Some(s) => s,
            None => scalar(&map, "seed", Value::as_u64, "a non-negative integer")?.unwrap_or(0),
        },
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::config("out", format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn coord_label(c: Coord) -> String {
    format!("{}:{}", c.row, c.col)
}

/// CSV of `simulate`, one row per point.
pub fn simulate_csv(table: &SweepTable) -> String {
    let mut s = format!("{SIMULATE_HEADER}\n");
    for r in &table.rows {
        let c = &r.config;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.link_fidelity,
            c.link_prob,
            c.grid.size(),
            c.region,
            c.k_hop,
            r.stats.mean_rate,
            r.stats.std_error,
            r.stats.abort_fraction
        );
    }
    s
}

/// CSV of `sweep`, one row per point, envelope rows flagged with 1.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in &table.rows {
        let c = &r.config;
        let (a, b) = c.grid.consumers();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.link_fidelity,
            c.link_prob,
            c.grid.size(),
            coord_label(a),
            coord_label(b),
            c.grid.distance(),
            c.region,
            c.k_hop,
            c.scheduler,
            c.distill_rounds,
            r.stats.mean_rate,
            r.stats.std_error,
            r.stats.abort_fraction,
            r.stats.mean_swaps,
            r.stats.raw_mean_ci,
            u8::from(r.on_envelope)
        );
    }
    s
}

pub fn cycles_csv(rows: &[CycleRow]) -> String {
    let mut s = format!("{CYCLES_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.n, r.p, r.cycle_len, r.fraction_pre, r.fraction_post);
    }
    s
}

fn sweep_json(table: &SweepTable) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let c = &r.config;
            let (a, b) = c.grid.consumers();
            json!({
                "fidelity": c.link_fidelity,
                "link_prob": c.link_prob,
                "grid": c.grid.size(),
                "alice": [a.row, a.col],
                "bob": [b.row, b.col],
                "distance": c.grid.distance(),
                "region": c.region.to_string(),
                "k": c.k_hop.to_string(),
                "scheduler": c.scheduler.to_string(),
                "t": c.distill_rounds,
                "trials": r.stats.trials,
                "mean_rate": r.stats.mean_rate,
                "std_err": r.stats.std_error,
                "abort_frac": r.stats.abort_fraction,
                "mean_swaps": r.stats.mean_swaps,
                "raw_mean_ci": r.stats.raw_mean_ci,
                "envelope": r.on_envelope,
            })
        })
        .collect();
    format!("{}\n", serde_json::to_string_pretty(&Value::Array(rows)).expect("plain values"))
}

fn cycles_json(rows: &[CycleRow]) -> String {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "p": r.p,
                "cycle_len": r.cycle_len,
                "fraction_pre": r.fraction_pre,
                "fraction_post": r.fraction_post,
            })
        })
        .collect();
    format!("{}\n", serde_json::to_string_pretty(&Value::Array(rows)).expect("plain values"))
}

fn trace_first_round(config: &ProtocolConfig, seed: u64) -> Result<()> {
    let runner = RoundRunner::new(*config)?;
    let (out, trace) = runner.run_traced(&mut trial_rng(seed, point_key(config), 0))?;
    let (a, b) = config.grid.consumers();
    eprintln!(
        "# grid={} alice={} bob={} p={} F={} k={} region={} scheduler={} t={}",
        config.grid.size(),
        a,
        b,
        config.link_prob,
        config.link_fidelity,
        config.k_hop,
        config.region,
        config.scheduler,
        config.distill_rounds
    );
    for line in &trace.lines {
        eprintln!("{line}");
    }
    match (out.aborted, out.coherent_information()) {
        (Some(reason), _) => eprintln!("abort={reason}"),
        (None, Some(ci)) => eprintln!("swaps={} coherent_information={ci}", out.swaps_performed),
        (None, None) => {}
    }
    Ok(())
}

fn simulate(args: &RunArgs, sweep: bool) -> Result<()> {
    let spec = load_simulation(&args.config, args.trials, args.seed)?;
    if args.trace {
        for p in spec.axes.points() {
            trace_first_round(&p, spec.master_seed)?;
        }
    }
    let table = envelope_sweep(&spec)?;
    let text = if args.json {
        sweep_json(&table)
    } else if sweep {
        sweep_csv(&table)
    } else {
        simulate_csv(&table)
    };
    emit(args.out.as_deref(), &text)?;
    if args.out.is_some() {
        for r in &table.rows {
            let c = &r.config;
            println!(
                "F={} p={} grid={} region={} k={}: rate={:.6} ± {:.6} abort={:.4} swaps={:.2}",
                c.link_fidelity,
                c.link_prob,
                c.grid.size(),
                c.region,
                c.k_hop,
                r.stats.mean_rate,
                r.stats.std_error,
                r.stats.abort_fraction,
                r.stats.mean_swaps
            );
        }
    }
    Ok(())
}

fn cycles(args: &RunArgs) -> Result<()> {
    let spec = load_cycle_study(&args.config, args.trials, args.seed)?;
    let rows = cycle_fraction_study(&spec.sizes, &spec.link_probs, &spec.ks, spec.trials, spec.master_seed)?;
    let text = if args.json { cycles_json(&rows) } else { cycles_csv(&rows) };
    emit(args.out.as_deref(), &text)
}

fn validate(args: &ValidateArgs) -> i32 {
    let options = ValidationOptions {
        seed: args.seed,
        ladder_samples: args.samples.max(1),
        fault: args.inject_fault.then_some(Fault::CorruptCoefficient),
        ..ValidationOptions::default()
    };
    match run_validation(&options) {
        Ok(report) => {
            print!("{report}");
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}
