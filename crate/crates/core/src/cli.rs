//! Command-line front end: `run`, `validate` and `sweep`.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::config::{load_config, ConfigError, ScenarioConfig};
use crate::environment::{load_timeseries, DataError, TimeStepRow};
use crate::orchestrator::{build_agents, run_simulation, Metrics, SimulationError, StepRecord};

#[derive(Debug, Parser)]
#[command(
    name = "hems",
    version,
    about = "Active-inference household energy simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trace.csv, efe.csv and metrics.json.
    Run(CommonArgs),
    /// Check the config and time series without simulating.
    Validate(CommonArgs),
    /// Run the scenario once per horizon into `<out>/h<H>/`.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,6")]
        horizons: Vec<usize>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub learn: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Data { path: String, source: DataError },
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data { .. } => 2,
            CliError::Simulation(_) | CliError::Output { .. } => 3,
        }
    }
}

/// Loads the config, applies flag overrides and re-validates.
pub fn resolve_config(args: &CommonArgs) -> Result<ScenarioConfig, CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if args.days.is_some() {
        config.days = args.days;
    }
    if let Some(h) = args.horizon {
        config.horizon = h;
    }
    if args.learn {
        config.learn = true;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

pub fn load_rows(path: &Path) -> Result<Vec<TimeStepRow>, CliError> {
    let data_err = |source| CliError::Data {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(|e| data_err(DataError::Io(e.to_string())))?;
    load_timeseries(BufReader::new(file)).map_err(data_err)
}

fn output_err(path: &Path, e: impl ToString) -> CliError {
    CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `bytes` to a temp file in the target directory, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| output_err(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| output_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| output_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| output_err(path, e))?;
    tmp.persist(path).map_err(|e| output_err(path, e.error))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct EfeRow {
    step: usize,
    day: usize,
    hour: u32,
    agent: &'static str,
    neg_g_min: f64,
    neg_g_mean: f64,
    neg_g_max: f64,
    neg_g_selected: f64,
    infeasible_policies: usize,
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn trace_csv(trace: &[StepRecord]) -> Result<Vec<u8>, csv::Error> {
    to_csv(trace)
}

pub fn efe_csv(trace: &[StepRecord]) -> Result<Vec<u8>, csv::Error> {
    to_csv(trace.iter().flat_map(|r| {
        [
            EfeRow {
                step: r.step,
                day: r.day,
                hour: r.hour,
                agent: "thermostat",
                neg_g_min: r.thermostat_neg_g_min,
                neg_g_mean: r.thermostat_neg_g_mean,
                neg_g_max: r.thermostat_neg_g_max,
                neg_g_selected: r.thermostat_neg_g,
                infeasible_policies: r.thermostat_infeasible,
            },
            EfeRow {
                step: r.step,
                day: r.day,
                hour: r.hour,
                agent: "battery",
                neg_g_min: r.battery_neg_g_min,
                neg_g_mean: r.battery_neg_g_mean,
                neg_g_max: r.battery_neg_g_max,
                neg_g_selected: r.battery_neg_g,
                infeasible_policies: r.battery_infeasible,
            },
        ]
    }))
}

/// Writes the three run outputs into `dir`.
pub fn write_outputs(dir: &Path, trace: &[StepRecord], metrics: &Metrics) -> Result<(), CliError> {
    let trace_path = dir.join("trace.csv");
    let efe_path = dir.join("efe.csv");
    let metrics_path = dir.join("metrics.json");
    let trace_bytes = trace_csv(trace).map_err(|e| output_err(&trace_path, e))?;
    let efe_bytes = efe_csv(trace).map_err(|e| output_err(&efe_path, e))?;
    let mut metrics_bytes =
        serde_json::to_vec_pretty(metrics).map_err(|e| output_err(&metrics_path, e))?;
    metrics_bytes.push(b'\n');
    write_atomic(&trace_path, &trace_bytes)?;
    write_atomic(&efe_path, &efe_bytes)?;
    write_atomic(&metrics_path, &metrics_bytes)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    horizon: usize,
    output_dir: String,
    high_tou_steps: usize,
    discharge_high_tou: usize,
    charge_low_tou: usize,
    discharge_low_tou: usize,
    charge_high_tou: usize,
    total_cost: f64,
    total_emissions_kg: f64,
    daily_avg_deviation_c: f64,
}

fn run_one(config: &ScenarioConfig, rows: &[TimeStepRow]) -> Result<Metrics, CliError> {
    let out = run_simulation(config, rows)?;
    write_outputs(&config.output_dir, &out.trace, &out.metrics)?;
    Ok(out.metrics)
}

pub fn run_command(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = resolve_config(&args)?;
            let rows = load_rows(&config.input)?;
            let m = run_one(&config, &rows)?;
            println!(
                "{} steps -> {}: deviation {:.2} °C/day (worst case {:.2}), cost {:.3}, emissions {:.3} kg",
                m.steps,
                config.output_dir.display(),
                m.daily_avg_deviation_c,
                m.worst_case_daily_avg_deviation_c,
                m.total_cost,
                m.total_emissions_kg
            );
        }
        Command::Validate(args) => {
            let config = resolve_config(&args)?;
            let rows = load_rows(&config.input)?;
            let agents = build_agents(&config, &rows)?;
            println!(
                "ok: {} rows, horizon {}, {} policies per agent",
                rows.len(),
                config.horizon,
                agents.thermostat.model.policies().len()
            );
        }
        Command::Sweep { common, horizons } => {
            let base = resolve_config(&common)?;
            let rows = load_rows(&base.input)?;
            let mut configs = Vec::new();
            for &h in &horizons {
                let mut c = base.clone();
                c.horizon = h;
                c.output_dir = base.output_dir.join(format!("h{h}"));
                c.validate()?;
                configs.push(c);
            }
            let mut summary = Vec::new();
            for c in &configs {
                let m = run_one(c, &rows)?;
                summary.push(SweepEntry {
                    horizon: c.horizon,
                    output_dir: format!("h{}", c.horizon),
                    high_tou_steps: m.charge_high_tou + m.discharge_high_tou + m.idle_high_tou,
                    discharge_high_tou: m.discharge_high_tou,
                    charge_low_tou: m.charge_low_tou,
                    discharge_low_tou: m.discharge_low_tou,
                    charge_high_tou: m.charge_high_tou,
                    total_cost: m.total_cost,
                    total_emissions_kg: m.total_emissions_kg,
                    daily_avg_deviation_c: m.daily_avg_deviation_c,
                });
                println!(
                    "horizon {}: {} of {} high-ToU steps discharged",
                    c.horizon,
                    m.discharge_high_tou,
                    m.charge_high_tou + m.discharge_high_tou + m.idle_high_tou
                );
            }
            let path = base.output_dir.join("sweep_summary.json");
            let mut bytes =
                serde_json::to_vec_pretty(&summary).map_err(|e| output_err(&path, e))?;
            bytes.push(b'\n');
            write_atomic(&path, &bytes)?;
        }
    }
    Ok(())
}
