//! Command-line front end for the simulator.
//!
//! Each subcommand is a thin orchestrator over `drivesim`; all of them are
//! deterministic given their flags, input files and seed. Exit codes are
//! 0 on success, 1 on domain errors and 2 on I/O errors.

mod bench;
mod preprocess;
pub mod render;
mod rollout;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use drivesim::engine::{EngineError, SimConfig};
use drivesim::scenario::{
    generate_synthetic, parse_prepared, parse_scenario, preprocess, scenario_to_json, MapTemplate, PreparedScenario,
    ScenarioError, SyntheticSpec, DEFAULT_CONTROLLABLE_THRESHOLD, DEFAULT_DECIMATION_THRESHOLD,
};
use thiserror::Error;

pub use bench::run_bench;
pub use preprocess::run_preprocess;
pub use rollout::run_rollout;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io { .. } => 2,
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Domain(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "drivesim", version, about = "Batched multi-agent driving simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decimate and annotate every scenario JSON in a directory.
    Preprocess(PreprocessArgs),
    /// Measure agent steps per second over a sweep of world counts.
    Bench(BenchArgs),
    /// Roll out a policy on one scenario and write its trajectory.
    Rollout(RolloutArgs),
    /// Draw a bird's-eye SVG of a scenario or trajectory frame.
    Render(RenderArgs),
    /// Write a synthetic scenario.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub output: PathBuf,
    /// Triangle-area threshold for decimation, m².
    #[arg(long, default_value_t = DEFAULT_DECIMATION_THRESHOLD)]
    pub decimate_eps: f64,
    #[arg(long, default_value_t = DEFAULT_CONTROLLABLE_THRESHOLD)]
    pub controllable_threshold: f64,
    /// Report unreadable scenarios and keep going.
    #[arg(long)]
    pub skip_bad: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Comma-separated world counts, e.g. `1,2,4,8`.
    #[arg(long, default_value = "1")]
    pub worlds: String,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// radial, lidar or view_cone; overrides the config file.
    #[arg(long)]
    pub obs: Option<String>,
    #[arg(long, default_value = "random")]
    pub policy: String,
    /// CSV file the rows are appended to.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Refuse configurations whose buffers would exceed this many MB.
    #[arg(long, default_value_t = 8192)]
    pub mem_cap_mb: u64,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// replay, goal_seek, random, constant or constant:ACCEL:STEER.
    #[arg(long, default_value = "replay")]
    pub policy: String,
    /// Trajectory JSON output.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also append the episode's metrics row to this CSV.
    #[arg(long)]
    pub metrics_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scenario, prepared scenario or trajectory JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub step: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// straight_road, intersection or parking_lot.
    #[arg(long)]
    pub template: String,
    #[arg(long)]
    pub agents: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Preprocess(a) => run_preprocess(&a, out),
        Command::Bench(a) => run_bench(&a, out),
        Command::Rollout(a) => run_rollout(&a, out),
        Command::Render(a) => render::run_render(&a, out),
        Command::Synth(a) => run_synth(&a, out),
    }
}

pub fn run_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let template = MapTemplate::parse(&args.template)
        .ok_or_else(|| CliError::Domain(format!("unknown template {:?}", args.template)))?;
    let scenario = generate_synthetic(&SyntheticSpec::new(template, args.agents, args.seed))
        .map_err(|e| CliError::Domain(e.to_string()))?;
    write_file(&args.out, &scenario_to_json(&scenario))?;
    say(
        out,
        format_args!("{}: {} agents, {} road points", args.out.display(), scenario.objects.len(), scenario.road_point_count()),
    )
}

pub(crate) fn say(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<()> {
    writeln!(out, "{line}").map_err(CliError::io(Path::new("<stdout>")))
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(CliError::io(path))
}

pub(crate) fn scenario_error(path: &Path, e: ScenarioError) -> CliError {
    CliError::Domain(format!("{}: {e}", path.display()))
}

/// Loads a prepared scenario, preprocessing raw scenario files with the
/// default thresholds.
pub fn load_prepared(path: &Path) -> Result<PreparedScenario> {
    let text = read_file(path)?;
    let is_prepared = serde_json::from_str::<serde_json::Value>(&text)
        .map(|v| v.get("decimated_roads").is_some())
        .unwrap_or(false);
    if is_prepared {
        parse_prepared(&text).map_err(|e| scenario_error(path, e))
    } else {
        let s = parse_scenario(&text).map_err(|e| scenario_error(path, e))?;
        Ok(preprocess(&s, DEFAULT_DECIMATION_THRESHOLD, DEFAULT_CONTROLLABLE_THRESHOLD))
    }
}

/// `*.json` files of a directory in lexicographic order.
pub(crate) fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .map(|e| e.map(|e| e.path()).map_err(CliError::io(dir)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Domain(format!("no scenario JSON files in {}", dir.display())));
    }
    Ok(files)
}

pub(crate) fn load_scenario_dir(dir: &Path) -> Result<Vec<Arc<PreparedScenario>>> {
    json_files(dir)?.iter().map(|p| load_prepared(p).map(Arc::new)).collect()
}

pub(crate) fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => Ok(SimConfig::from_toml_str(&read_file(p)?)?),
        None => Ok(SimConfig::default()),
    }
}

/// Appends `row` to a CSV file, writing `header` first when the file is new
/// or empty. An existing file with a different header is refused.
pub fn append_csv(path: &Path, header: &str, row: &str) -> Result<()> {
    let existing = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(CliError::io(path)(e)),
    };
    let mut text = String::new();
    if existing.is_empty() {
        text.push_str(header);
        text.push('\n');
    } else {
        let first = existing.lines().next().unwrap_or_default();
        if first != header {
            return Err(CliError::Domain(format!("{} has header {first:?}, expected {header:?}", path.display())));
        }
        if !existing.ends_with('\n') {
            text.push('\n');
        }
    }
    text.push_str(row);
    text.push('\n');
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(CliError::io(path))?;
    f.write_all(text.as_bytes()).map_err(CliError::io(path))
}
