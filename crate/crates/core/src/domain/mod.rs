//! Household-energy generative models for the thermostat and battery agents.

mod battery;
mod battery_agent;
mod comfort;
mod energy;
mod grid;
mod thermo;
mod thermostat_agent;

use thiserror::Error;

use crate::inference::{ConditionalTable, InferenceError};

pub use battery::{soc_transition, BatteryAction, BatteryParams};
pub use battery_agent::{build_battery_model, BatteryExogenous, BatteryModel};
pub use comfort::{comfort_log_preference, BatteryPreferences, ComfortTargets};
pub use energy::{cost_and_ghg, energy_accounting, EnergyBins};
pub use grid::Grid;
pub use thermo::{
    next_temperature, next_temperature_bin, thermo_transition, ThermoParams, ThermostatAction,
};
pub use thermostat_agent::{build_thermostat_model, ThermostatModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

/// Observation channel that reports the true bin with probability `1 - p`
/// and an adjacent bin otherwise.
pub fn adjacent_noise_likelihood(n: usize, p: f64) -> Result<ConditionalTable, DomainError> {
    if !(0.0..=0.5).contains(&p) {
        return Err(DomainError::InvalidParams(format!(
            "observation noise must be in [0, 0.5], got {p}"
        )));
    }
    Ok(ConditionalTable::from_fn(n, vec![n], |s| {
        let s = s[0];
        let mut col = vec![0.0; n];
        col[s] = 1.0 - p;
        match (s > 0, s + 1 < n) {
            (true, true) => {
                col[s - 1] += p / 2.0;
                col[s + 1] += p / 2.0;
            }
            (true, false) => col[s - 1] += p,
            (false, true) => col[s + 1] += p,
            (false, false) => col[s] += p,
        }
        col
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_channel_columns() {
        let a = adjacent_noise_likelihood(4, 0.2).unwrap();
        assert_eq!(a.slice(&[0]), &[0.8, 0.2, 0.0, 0.0]);
        assert_eq!(a.slice(&[2]), &[0.0, 0.1, 0.8, 0.1]);
        assert!(a.max_slice_error() < 1e-12);
        let exact = adjacent_noise_likelihood(3, 0.0).unwrap();
        assert_eq!(exact, ConditionalTable::identity(3));
        assert!(adjacent_noise_likelihood(3, 0.7).is_err());
    }
}
