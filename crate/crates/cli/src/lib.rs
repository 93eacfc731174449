//! Library side of the `drn` command: argument definitions, config parsing
//! and the three subcommands.

pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use drn_core::experiments::export::{
    write_episode_csv, write_json, write_preamble, write_sweep_csv, write_table_csv,
};
use drn_core::experiments::{
    compare_table, run_episode, sweep, FleetKind, ScenarioConfig, SweepAxis,
};
use drn_core::SensingMode;

pub use config::{parse_config, parse_config_str, ConfigFile};
pub use output::{write_atomic, OutputDir, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<drn_core::Error> for CliError {
    fn from(e: drn_core::Error) -> Self {
        match e {
            drn_core::Error::Config(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "drn",
    version,
    about = "Dynamic radar network tracking simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one episode and export the per-step log.
    Episode(Common),
    /// Monte Carlo comparison table over the file's cells (default: the four
    /// sensing modes for dynamic and fixed fleets).
    Table(Common),
    /// Monte Carlo sweep of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// N, rcs, sigma0r or sigma_bearing (degrees).
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        values: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides monte_carlo.base_seed. For `episode` it is the
    /// episode seed itself.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides monte_carlo.runs.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Worker threads (default: available cores).
    #[arg(long, env = "DRN_JOBS")]
    pub jobs: Option<usize>,
    /// Only report errors on standard error.
    #[arg(long)]
    pub quiet: bool,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Episode(c) | Command::Table(c) => c,
            Command::Sweep { common, .. } => common,
        }
    }
}

fn apply_overrides(c: &mut ScenarioConfig, common: &Common) -> Result<(), CliError> {
    if let Some(seed) = common.seed {
        c.monte_carlo.base_seed = seed;
    }
    if let Some(runs) = common.runs {
        if runs == 0 {
            return Err(CliError::Usage("--runs must be at least 1".into()));
        }
        c.monte_carlo.runs = runs;
    }
    Ok(())
}

/// The eight cells of the reference comparison, derived from `base`.
pub fn default_cells(base: &ScenarioConfig) -> Vec<(String, ScenarioConfig)> {
    let modes = [
        ("ranging", SensingMode::RANGE),
        ("ranging+doppler", SensingMode::RANGE_DOPPLER),
        ("bearing", SensingMode::BEARING),
        ("bearing+doppler", SensingMode::BEARING_DOPPLER),
    ];
    let mut cells = Vec::new();
    for (name, mode) in modes {
        for (fleet, kind) in [("dynamic", FleetKind::Dynamic), ("fixed", FleetKind::Fixed)] {
            let mut c = base.clone();
            c.sensing.mode = mode;
            c.fleet.kind = kind;
            if kind == FleetKind::Fixed {
                c.fleet.count = c.fleet.fixed_positions.len();
            }
            cells.push((format!("{name}/{fleet}"), c));
        }
    }
    cells
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> drn_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn preamble(config: &ScenarioConfig, extra: &[(&str, String)]) -> Result<Vec<u8>, CliError> {
    let mut lines = vec![
        ("config_hash", config.hash()),
        ("config", config.canonical_json()),
    ];
    lines.extend(extra.iter().cloned());
    csv_bytes(|b| write_preamble(b, &lines))
}

/// Runs one parsed command. Machine-readable results go to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let common = cli.command.common();
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // A global pool can only be set once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let file = parse_config(&common.config)?;
    let mut base = file.base.clone();
    apply_overrides(&mut base, common)?;
    let mut out = OutputDir::create(&common.out)?;

    let (name, seed, runs) = match &cli.command {
        Command::Episode(_) => {
            let seed = common.seed.unwrap_or(base.monte_carlo.base_seed);
            log::info!("episode: {} steps, seed {seed}", base.world.steps);
            let log = run_episode(&base, seed)?;
            let bytes = csv_bytes(|b| write_episode_csv(&log, &base, b))?;
            out.write("episode.csv", &bytes)?;
            let final_step = log.records.last().map(|r| r.step).unwrap_or(0);
            writeln!(stdout, "episode,{},{},{}", base.hash(), seed, final_step)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            ("episode", seed, 1)
        }
        Command::Table(_) => {
            let mut cells = if file.cells.is_empty() {
                default_cells(&file.base)
            } else {
                file.cells.clone()
            };
            for (_, c) in &mut cells {
                apply_overrides(c, common)?;
            }
            let rows = compare_table(&cells)?;
            let table = csv_bytes(|b| write_table_csv(&rows, b))?;
            let mut file_bytes =
                preamble(&base, &[("seed", base.monte_carlo.base_seed.to_string())])?;
            file_bytes.extend_from_slice(&table);
            out.write("table.csv", &file_bytes)?;
            out.write("table.json", &csv_bytes(|b| write_json(&rows, b))?)?;
            stdout
                .write_all(&table)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            ("table", base.monte_carlo.base_seed, base.monte_carlo.runs)
        }
        Command::Sweep { axis, values, .. } => {
            let axis: SweepAxis = axis
                .parse()
                .map_err(|e: drn_core::Error| CliError::Usage(e.to_string()))?;
            let points = sweep(&base, axis, values)?;
            let body = csv_bytes(|b| write_sweep_csv(&points, b))?;
            let mut file_bytes = preamble(&base, &[("axis", axis.to_string())])?;
            file_bytes.extend_from_slice(&body);
            out.write("sweep.csv", &file_bytes)?;
            out.write("sweep.json", &csv_bytes(|b| write_json(&points, b))?)?;
            stdout
                .write_all(&body)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            ("sweep", base.monte_carlo.base_seed, base.monte_carlo.runs)
        }
    };

    let manifest = out.finish(RunManifest {
        command: name.into(),
        config_path: common.config.clone(),
        config_hash: base.hash(),
        seed,
        runs,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        outputs: Vec::new(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })?;
    log::info!("wrote {}", manifest.display());
    Ok(())
}
