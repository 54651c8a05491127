//! Command-line front end.
//!
//! Stdout carries machine-readable output only (JSON documents, CSV tables,
//! preset names); diagnostics go to stderr. Exit codes: 0 success, 2 bad
//! configuration or usage, 3 infeasible constraint, 4 I/O failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::bench::{run_pipeline, ExperimentConfig};
use crate::error::{Error, Result};
use crate::estimator::{brute_force_best, AccuracyModel, LatencyModel};
use crate::multi_target::{run_strategy, MultiTargetPlan, StrategyKind};
use crate::search::{evolutionary_search, SearchParams, WarmStart};
use crate::space::{DesignSpace, PRESET_NAMES};

#[derive(Debug, Parser)]
#[command(
    name = "evonas",
    version,
    about = "Latency-constrained evolutionary subnetwork search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one evolutionary search against a single latency target.
    Search(SearchArgs),
    /// Run a multi-target schedule with one strategy.
    Multi(MultiArgs),
    /// Exhaustively score a small space and print the best configuration.
    Oracle(OracleArgs),
    /// Run a benchmark campaign from a config file and write its artifacts.
    Bench(BenchArgs),
    /// List the built-in design space presets.
    Spaces,
}

/// Rendering of JSON documents on stdout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Pretty,
    Compact,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Design space preset.
    #[arg(long, default_value = "mobilenetv3")]
    space: String,
    /// Latency target in milliseconds.
    #[arg(long)]
    target: f64,
    /// Search parameter JSON file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    population: Option<usize>,
    /// Seed of the synthesized latency table.
    #[arg(long, default_value_t = 1)]
    latency_seed: u64,
    /// Seed of the surrogate accuracy model.
    #[arg(long, default_value_t = 0)]
    accuracy_seed: u64,
    /// Also write the outcome JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Pretty)]
    format: Format,
}

#[derive(Debug, Args)]
struct MultiArgs {
    /// Design space preset.
    #[arg(long, default_value = "mobilenetv3")]
    space: String,
    /// Comma-separated latency targets in milliseconds.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    targets: Option<Vec<f64>>,
    /// vanilla, top-down or bottom-up.
    #[arg(long, value_parser = parse_strategy, default_value = "vanilla")]
    strategy: StrategyKind,
    /// Plan JSON file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iterations of the first (cold) stage.
    #[arg(long)]
    n_first: Option<u64>,
    /// Iterations of every warm-started stage.
    #[arg(long)]
    n_rest: Option<u64>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long, default_value_t = 1)]
    latency_seed: u64,
    #[arg(long, default_value_t = 0)]
    accuracy_seed: u64,
    /// Write the full outcome JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Pretty)]
    format: Format,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Design space preset; must fit the enumeration cap.
    #[arg(long, default_value = "tiny-fixture")]
    space: String,
    /// Latency target in milliseconds.
    #[arg(long)]
    target: f64,
    #[arg(long, default_value_t = 1)]
    latency_seed: u64,
    #[arg(long, default_value_t = 0)]
    accuracy_seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Pretty)]
    format: Format,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Campaign JSON file; defaults cover every field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory; falls back to the config value, then $EVONAS_OUT,
    /// then ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the logical CPU count.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the design spaces of the campaign.
    #[arg(long = "space", value_delimiter = ',', num_args = 1..)]
    spaces: Vec<String>,
    #[arg(long)]
    repetitions: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Pretty)]
    format: Format,
}

fn parse_strategy(s: &str) -> std::result::Result<StrategyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses real process arguments, runs, prints, and returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Same as [`run`] but over explicit arguments, for tests.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version print to stdout and exit 0; real usage errors
            // print to stderr and exit 2, like any config problem
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one parsed invocation and returns what belongs on stdout.
fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Search(a) => cmd_search(a),
        Command::Multi(a) => cmd_multi(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Spaces => Ok(PRESET_NAMES.map(|n| format!("{n}\n")).concat()),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn render<T: Serialize>(value: &T, format: Format) -> Result<String> {
    let mut s = match format {
        Format::Pretty => serde_json::to_string_pretty(value)?,
        Format::Compact => serde_json::to_string(value)?,
    };
    s.push('\n');
    Ok(s)
}

fn models(space: &str, latency_seed: u64, accuracy_seed: u64) -> Result<(DesignSpace, LatencyModel, AccuracyModel)> {
    let space = DesignSpace::preset(space)?;
    let lat = LatencyModel::for_space(&space, latency_seed);
    Ok((space, lat, AccuracyModel::with_seed(accuracy_seed)))
}

fn cmd_search(a: SearchArgs) -> Result<String> {
    let (space, lat, acc) = models(&a.space, a.latency_seed, a.accuracy_seed)?;
    let mut params: SearchParams = match &a.config {
        Some(path) => read_json(path)?,
        None => SearchParams::default(),
    };
    if let Some(n) = a.iterations {
        params.num_iterations = n;
    }
    if let Some(p) = a.population {
        params.population_size = p;
    }
    let outcome = evolutionary_search(
        &space,
        &lat,
        &acc,
        a.target,
        &params,
        &WarmStart::none(),
        a.seed.unwrap_or(0),
    )?;
    let json = render(&outcome, a.format)?;
    if let Some(path) = &a.out {
        fs::write(path, &json)?;
    }
    Ok(json)
}

fn cmd_multi(a: MultiArgs) -> Result<String> {
    let (space, lat, acc) = models(&a.space, a.latency_seed, a.accuracy_seed)?;
    let mut plan: MultiTargetPlan = match &a.config {
        Some(path) => read_json(path)?,
        None => MultiTargetPlan::new(Vec::new(), 0),
    };
    if let Some(t) = a.targets {
        plan.targets_ms = t;
    }
    if let Some(s) = a.seed {
        plan.seed = s;
    }
    if let Some(n) = a.n_first {
        plan.n_first = n;
    }
    if let Some(n) = a.n_rest {
        plan.n_rest = n;
    }
    if let Some(p) = a.population {
        plan.base_params.population_size = p;
    }
    let outcome = run_strategy(&space, &lat, &acc, &plan, a.strategy)?;
    if let Some(path) = &a.out {
        fs::write(path, render(&outcome, a.format)?)?;
    }
    // stage summary in processing order
    let mut table = String::from("target_ms,accuracy,latency_ms,evaluations,rejections,iterations\n");
    for o in &outcome.per_target {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            o.target_ms, o.best.accuracy, o.best.latency_ms, o.evaluations, o.rejections, o.iterations_run
        ));
    }
    Ok(table)
}

fn cmd_oracle(a: OracleArgs) -> Result<String> {
    let (space, lat, acc) = models(&a.space, a.latency_seed, a.accuracy_seed)?;
    let result = brute_force_best(&space, &lat, &acc, a.target)?;
    render(&result, a.format)
}

fn cmd_bench(a: BenchArgs) -> Result<String> {
    let mut cfg: ExperimentConfig = match &a.config {
        Some(path) => read_json(path)?,
        None => ExperimentConfig::default(),
    };
    if !a.spaces.is_empty() {
        cfg.spaces = a.spaces.clone();
    }
    if let Some(r) = a.repetitions {
        cfg.repetitions = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let out_dir = a
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os("EVONAS_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let jobs = match a.jobs {
        Some(0) => return Err(Error::InvalidParams("--jobs must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;
    let summary = pool.install(|| run_pipeline(&cfg, &out_dir))?;
    eprintln!("artifacts written to {}", out_dir.display());
    render(&summary, a.format)
}
