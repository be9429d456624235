//! Generative process: ground truth, exogenous time series and observations.

use std::io::Read;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    cost_and_ghg, energy_accounting, next_temperature_bin, BatteryAction, BatteryParams, Grid,
    ThermoParams, ThermostatAction,
};

/// Exact header of the time-series input file.
pub const TIMESERIES_HEADER: &str =
    "time_of_day,outdoor_temp_c,solar_kwh,baseline_kwh,tou_rate,tou_high,occupancy,ghg_rate";

pub const STEPS_PER_DAY: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("time series is empty")]
    Empty,
    #[error("bad header: expected `{TIMESERIES_HEADER}`, found `{0}`")]
    Header(String),
    #[error("row {row}, column {column}: {message}")]
    Field {
        row: usize,
        column: String,
        message: String,
    },
    #[error("day {day} has {count} rows, expected {STEPS_PER_DAY} (hours 0, 2, ..., 22)")]
    RowCount { day: usize, count: usize },
    #[error("cannot read time series: {0}")]
    Io(String),
}

/// One two-hour step of exogenous inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeStepRow {
    pub time_of_day: u32,
    pub outdoor_temp_c: f64,
    pub solar_kwh: f64,
    pub baseline_kwh: f64,
    pub tou_rate: f64,
    pub tou_high: bool,
    pub occupancy: bool,
    pub ghg_rate: f64,
}

/// Parses and validates the delimited time-series format.
pub fn load_timeseries<R: Read>(source: R) -> Result<Vec<TimeStepRow>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::None)
        .from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(DataError::Empty),
        Some(r) => r.map_err(|e| DataError::Io(e.to_string()))?,
    };
    let header_line = header.iter().collect::<Vec<_>>().join(",");
    let header_line = header_line.trim_start_matches('\u{feff}');
    if header_line != TIMESERIES_HEADER {
        return Err(DataError::Header(header_line.to_string()));
    }
    let columns: Vec<&str> = TIMESERIES_HEADER.split(',').collect();

    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| DataError::Field {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if rec.len() != columns.len() {
            return Err(DataError::Field {
                row,
                column: columns.get(rec.len()).unwrap_or(&"").to_string(),
                message: format!("expected {} fields, found {}", columns.len(), rec.len()),
            });
        }
        let err = |col: usize, message: String| DataError::Field {
            row,
            column: columns[col].to_string(),
            message,
        };
        let num = |col: usize| -> Result<f64, DataError> {
            let raw = rec[col].trim();
            let v: f64 = raw
                .parse()
                .map_err(|_| err(col, format!("`{raw}` is not a number")))?;
            if !v.is_finite() {
                return Err(err(col, format!("`{raw}` is not finite")));
            }
            Ok(v)
        };
        let non_neg = |col: usize| -> Result<f64, DataError> {
            let v = num(col)?;
            if v < 0.0 {
                return Err(err(col, format!("{v} must be non-negative")));
            }
            Ok(v)
        };
        let flag = |col: usize| -> Result<bool, DataError> {
            match rec[col].trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(err(col, format!("`{other}` must be 0 or 1"))),
            }
        };
        let hour_raw = rec[0].trim();
        let time_of_day: u32 = hour_raw
            .parse()
            .map_err(|_| err(0, format!("`{hour_raw}` is not an integer hour")))?;
        if time_of_day > 22 || !time_of_day.is_multiple_of(2) {
            return Err(err(
                0,
                format!("hour {time_of_day} must be one of 0, 2, ..., 22"),
            ));
        }
        rows.push(TimeStepRow {
            time_of_day,
            outdoor_temp_c: num(1)?,
            solar_kwh: non_neg(2)?,
            baseline_kwh: non_neg(3)?,
            tou_rate: non_neg(4)?,
            tou_high: flag(5)?,
            occupancy: flag(6)?,
            ghg_rate: non_neg(7)?,
        });
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    validate_days(&rows)?;
    Ok(rows)
}

fn validate_days(rows: &[TimeStepRow]) -> Result<(), DataError> {
    let mut day = 0;
    let mut count = 0;
    let mut prev: Option<u32> = None;
    for (i, r) in rows.iter().enumerate() {
        if let Some(p) = prev {
            if r.time_of_day <= p {
                if count != STEPS_PER_DAY {
                    return Err(DataError::RowCount {
                        day: day + 1,
                        count,
                    });
                }
                day += 1;
                count = 0;
            } else if r.time_of_day != p + 2 {
                return Err(DataError::Field {
                    row: i + 1,
                    column: "time_of_day".into(),
                    message: format!("hour {} does not follow {p} by 2", r.time_of_day),
                });
            }
        }
        if count == 0 && r.time_of_day != 0 {
            return Err(DataError::Field {
                row: i + 1,
                column: "time_of_day".into(),
                message: format!(
                    "day {} starts at hour {}, expected 0",
                    day + 1,
                    r.time_of_day
                ),
            });
        }
        count += 1;
        prev = Some(r.time_of_day);
    }
    if count != STEPS_PER_DAY {
        return Err(DataError::RowCount {
            day: day + 1,
            count,
        });
    }
    Ok(())
}

pub fn count_days(rows: &[TimeStepRow]) -> usize {
    rows.len() / STEPS_PER_DAY
}

/// Adjacent-bin observation flip probabilities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Room-temperature observation seen by the thermostat.
    pub room_temp: f64,
    /// SoC observation seen by the battery agent.
    pub soc: f64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [("noise.room_temp", self.room_temp), ("noise.soc", self.soc)] {
            if !(0.0..=0.5).contains(&p) {
                return Err(format!("{name} must be in [0, 0.5], got {p}"));
            }
        }
        Ok(())
    }
}

/// True physical state of the household.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub room_temp_c: f64,
    pub soc: f64,
    pub cumulative_cost: f64,
    pub cumulative_emissions: f64,
}

/// Parameters shared by the environment and the agents' models.
#[derive(Debug, Clone)]
pub struct Physics {
    pub thermo: ThermoParams,
    pub temp_grid: Grid,
    pub battery: BatteryParams,
    pub soc_grid: Grid,
}

impl Physics {
    pub fn new(
        thermo: ThermoParams,
        battery: BatteryParams,
    ) -> Result<Self, crate::domain::DomainError> {
        thermo.validate()?;
        battery.validate()?;
        Ok(Self {
            temp_grid: thermo.grid()?,
            soc_grid: battery.grid()?,
            thermo,
            battery,
        })
    }

    pub fn initial_truth(&self) -> GroundTruth {
        GroundTruth {
            room_temp_c: self.thermo.initial_temp_c,
            soc: self.battery.initial_soc,
            cumulative_cost: 0.0,
            cumulative_emissions: 0.0,
        }
    }

    /// Noise-free observation indices of a ground-truth state.
    pub fn exact_observation(&self, truth: &GroundTruth) -> Observation {
        Observation {
            room_temp_bin: self.temp_grid.nearest(truth.room_temp_c),
            soc_bin: self.soc_grid.nearest(truth.soc),
        }
    }
}

/// Observation indices emitted for each agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub room_temp_bin: usize,
    pub soc_bin: usize,
}

/// Energy and money flows of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFlows {
    pub battery_action: BatteryAction,
    pub baseline_kwh: f64,
    pub hvac_kwh: f64,
    pub battery_kwh: f64,
    pub solar_kwh: f64,
    pub total_kwh: f64,
    pub cost: f64,
    pub emissions_kg: f64,
}

/// Flips `bin` to a neighbour with probability `p`.
pub fn noisy_bin<R: Rng + ?Sized>(bin: usize, len: usize, p: f64, rng: &mut R) -> usize {
    if p <= 0.0 || len < 2 {
        return bin;
    }
    if rng.random::<f64>() >= p {
        return bin;
    }
    match (bin > 0, bin + 1 < len) {
        (true, true) => {
            if rng.random_bool(0.5) {
                bin - 1
            } else {
                bin + 1
            }
        }
        (true, false) => bin - 1,
        _ => bin + 1,
    }
}

/// Applies both agents' actions to the ground truth for one step.
pub fn step_env<R: Rng + ?Sized>(
    physics: &Physics,
    truth: &GroundTruth,
    row: &TimeStepRow,
    thermostat_action: ThermostatAction,
    battery_action: BatteryAction,
    noise: &NoiseConfig,
    rng: &mut R,
) -> (GroundTruth, StepFlows, Observation) {
    let grid = &physics.temp_grid;
    let temp_bin = next_temperature_bin(
        &physics.thermo,
        grid,
        grid.nearest(truth.room_temp_c),
        grid.nearest(row.outdoor_temp_c),
        thermostat_action,
    );
    let battery = &physics.battery;
    let effective = battery.effective_action(truth.soc, battery_action);
    let soc = physics.soc_grid.value(
        physics
            .soc_grid
            .nearest(battery.next_soc(truth.soc, effective)),
    );

    let hvac_kwh = physics.thermo.hvac_energy(thermostat_action);
    let battery_kwh = battery.battery_energy(truth.soc, effective);
    let total_kwh = energy_accounting(row.baseline_kwh, hvac_kwh, battery_kwh, row.solar_kwh);
    let (cost, emissions_kg) = cost_and_ghg(total_kwh, row.tou_rate, row.ghg_rate);

    let next = GroundTruth {
        room_temp_c: grid.value(temp_bin),
        soc,
        cumulative_cost: truth.cumulative_cost + cost,
        cumulative_emissions: truth.cumulative_emissions + emissions_kg,
    };
    let exact = physics.exact_observation(&next);
    let obs = Observation {
        room_temp_bin: noisy_bin(exact.room_temp_bin, grid.len(), noise.room_temp, rng),
        soc_bin: noisy_bin(exact.soc_bin, physics.soc_grid.len(), noise.soc, rng),
    };
    let flows = StepFlows {
        battery_action: effective,
        baseline_kwh: row.baseline_kwh,
        hvac_kwh,
        battery_kwh,
        solar_kwh: row.solar_kwh,
        total_kwh,
        cost,
        emissions_kg,
    };
    (next, flows, obs)
}
