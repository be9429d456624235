use serde::{Deserialize, Serialize};

use super::{DomainError, Grid};
use crate::inference::ConditionalTable;

/// Thermostat settings. The index order is the action axis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThermostatAction {
    Off,
    Heat,
    Cool,
}

impl ThermostatAction {
    pub const ALL: [ThermostatAction; 3] = [Self::Off, Self::Heat, Self::Cool];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Off => "off",
            Self::Heat => "heat",
            Self::Cool => "cool",
        }
    }
}

/// Single-zone room thermodynamics on a temperature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermoParams {
    /// Fraction of the indoor/outdoor gap closed per 2-hour step.
    pub alpha: f64,
    /// °C added (heat) or removed (cool) per active step.
    pub hvac_delta: f64,
    pub temp_min: f64,
    pub temp_max: f64,
    pub temp_step: f64,
    /// kWh drawn per heating or cooling step.
    pub hvac_kwh: f64,
    pub initial_temp_c: f64,
    /// Probability the agent's model moves one bin off the formula's prediction.
    pub process_noise: f64,
}

impl Default for ThermoParams {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            hvac_delta: 1.5,
            temp_min: 8.0,
            temp_max: 32.0,
            temp_step: 1.0,
            hvac_kwh: 1.0,
            initial_temp_c: 18.0,
            process_noise: 0.0,
        }
    }
}

impl ThermoParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: String| Err(DomainError::InvalidParams(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!(
                "thermo.alpha must be in (0, 1), got {}",
                self.alpha
            ));
        }
        if !(self.hvac_delta > 0.0) {
            return bad(format!(
                "thermo.hvac_delta must be positive, got {}",
                self.hvac_delta
            ));
        }
        if !(self.hvac_kwh >= 0.0) {
            return bad(format!(
                "thermo.hvac_kwh must be non-negative, got {}",
                self.hvac_kwh
            ));
        }
        if !(self.temp_min < self.temp_max) {
            return bad("thermo.temp_min must be below thermo.temp_max".into());
        }
        if !(0.0..0.5).contains(&self.process_noise) {
            return bad(format!(
                "thermo.process_noise must be in [0, 0.5), got {}",
                self.process_noise
            ));
        }
        let grid = self.grid()?;
        if grid.index_of(self.initial_temp_c).is_none() {
            return bad(format!(
                "thermo.initial_temp_c {} is not on the temperature grid",
                self.initial_temp_c
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, DomainError> {
        Grid::uniform(self.temp_min, self.temp_max, self.temp_step)
    }

    pub fn hvac_energy(&self, action: ThermostatAction) -> f64 {
        match action {
            ThermostatAction::Off => 0.0,
            _ => self.hvac_kwh,
        }
    }
}

/// `T' = T + alpha (T_out - T) + delta(action)`, before binning.
pub fn next_temperature(
    params: &ThermoParams,
    temp: f64,
    outdoor: f64,
    action: ThermostatAction,
) -> f64 {
    let delta = match action {
        ThermostatAction::Off => 0.0,
        ThermostatAction::Heat => params.hvac_delta,
        ThermostatAction::Cool => -params.hvac_delta,
    };
    temp + params.alpha * (outdoor - temp) + delta
}

/// Binned step used by both the agent's model and the environment.
pub fn next_temperature_bin(
    params: &ThermoParams,
    grid: &Grid,
    temp_bin: usize,
    outdoor_bin: usize,
    action: ThermostatAction,
) -> usize {
    grid.nearest(next_temperature(
        params,
        grid.value(temp_bin),
        grid.value(outdoor_bin),
        action,
    ))
}

/// Transition table over `(next_temp | temp, outdoor_temp, action)`.
pub fn thermo_transition(params: &ThermoParams) -> Result<ConditionalTable, DomainError> {
    params.validate()?;
    let grid = params.grid()?;
    let n = grid.len();
    let noise = params.process_noise;
    Ok(ConditionalTable::from_fn(n, vec![n, n, 3], |p| {
        let action = ThermostatAction::from_index(p[2]).expect("three actions");
        let centre = next_temperature_bin(params, &grid, p[0], p[1], action);
        let mut slice = vec![0.0; n];
        slice[centre] += 1.0 - noise;
        if noise > 0.0 {
            match (centre > 0, centre + 1 < n) {
                (true, true) => {
                    slice[centre - 1] += noise / 2.0;
                    slice[centre + 1] += noise / 2.0;
                }
                (true, false) => slice[centre - 1] += noise,
                (false, true) => slice[centre + 1] += noise,
                (false, false) => slice[centre] += noise,
            }
        }
        slice
    })?)
}
