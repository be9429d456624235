use serde::{Deserialize, Serialize};

use super::DomainError;

/// Occupancy-dependent temperature targets and how strongly they are held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComfortTargets {
    pub occupied_target_c: f64,
    pub unoccupied_target_c: f64,
    /// Nats of log-preference lost per °C away from the target.
    pub preference_precision: f64,
    /// Scale applied to the comfort log-preference during high ToU.
    pub tou_high_flattening: f64,
    /// Nats of log-preference lost per kWh of HVAC use.
    pub hvac_energy_penalty: f64,
}

impl Default for ComfortTargets {
    fn default() -> Self {
        Self {
            occupied_target_c: 18.0,
            unoccupied_target_c: 16.0,
            preference_precision: 1.5,
            tou_high_flattening: 0.5,
            hvac_energy_penalty: 2.0,
        }
    }
}

impl ComfortTargets {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: String| Err(DomainError::InvalidParams(m));
        if !(self.occupied_target_c > self.unoccupied_target_c) {
            return bad("comfort.occupied_target_c must exceed comfort.unoccupied_target_c".into());
        }
        if !(self.preference_precision > 0.0 && self.preference_precision.is_finite()) {
            return bad(format!(
                "comfort.preference_precision must be positive, got {}",
                self.preference_precision
            ));
        }
        if !(self.tou_high_flattening > 0.0 && self.tou_high_flattening <= 1.0) {
            return bad(format!(
                "comfort.tou_high_flattening must be in (0, 1], got {}",
                self.tou_high_flattening
            ));
        }
        if !(self.hvac_energy_penalty >= 0.0 && self.hvac_energy_penalty.is_finite()) {
            return bad(format!(
                "comfort.hvac_energy_penalty must be non-negative, got {}",
                self.hvac_energy_penalty
            ));
        }
        Ok(())
    }

    pub fn target(&self, occupied: bool) -> f64 {
        if occupied {
            self.occupied_target_c
        } else {
            self.unoccupied_target_c
        }
    }
}

/// Unnormalized comfort log-preference for a room temperature.
pub fn comfort_log_preference(
    targets: &ComfortTargets,
    temp_c: f64,
    occupied: bool,
    tou_high: bool,
) -> f64 {
    let scale = if tou_high {
        targets.tou_high_flattening
    } else {
        1.0
    };
    -targets.preference_precision * (temp_c - targets.target(occupied)).abs() * scale
}

/// Battery agent's cost, emission and dispatch preferences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryPreferences {
    /// Nats per currency unit of step cost.
    pub cost_precision: f64,
    /// Nats per kg of step emissions.
    pub ghg_precision: f64,
    /// Nats lost per charging or discharging step.
    pub cycling_penalty: f64,
    /// Give forbidden charge/discharge attempts zero preference.
    pub hard_constraints: bool,
}

impl Default for BatteryPreferences {
    fn default() -> Self {
        Self {
            cost_precision: 5.0,
            ghg_precision: 0.1,
            cycling_penalty: 0.25,
            hard_constraints: true,
        }
    }
}

impl BatteryPreferences {
    pub fn validate(&self) -> Result<(), DomainError> {
        for (name, v) in [
            ("battery_prefs.cost_precision", self.cost_precision),
            ("battery_prefs.ghg_precision", self.ghg_precision),
            ("battery_prefs.cycling_penalty", self.cycling_penalty),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(DomainError::InvalidParams(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}
