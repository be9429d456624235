use serde::{Deserialize, Serialize};

use super::{DomainError, Grid};
use crate::inference::ConditionalTable;

const SOC_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatteryAction {
    Off,
    Charge,
    Discharge,
}

impl BatteryAction {
    pub const ALL: [BatteryAction; 3] = [Self::Off, Self::Charge, Self::Discharge];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Off => "off",
            Self::Charge => "charge",
            Self::Discharge => "discharge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryParams {
    pub soc_levels: Vec<f64>,
    /// SoC change per charging or discharging step.
    pub step_fraction: f64,
    pub initial_soc: f64,
    /// Discharging is blocked at or below this SoC.
    pub min_discharge_soc: f64,
    /// Charging is blocked at or above this SoC.
    pub max_charge_soc: f64,
    pub capacity_kwh: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            soc_levels: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            step_fraction: 0.2,
            initial_soc: 0.2,
            min_discharge_soc: 0.2,
            max_charge_soc: 0.8,
            capacity_kwh: 10.0,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: String| Err(DomainError::InvalidParams(m));
        if self.soc_levels.len() < 2
            || self.soc_levels.windows(2).any(|w| !(w[0] < w[1]))
            || self.soc_levels[0] < 0.0
            || *self.soc_levels.last().unwrap() > 1.0
        {
            return bad("battery.soc_levels must be strictly increasing within [0, 1]".into());
        }
        if !(self.step_fraction > 0.0 && self.step_fraction <= 1.0) {
            return bad(format!(
                "battery.step_fraction must be in (0, 1], got {}",
                self.step_fraction
            ));
        }
        let grid = self.grid()?;
        if grid.index_of(self.initial_soc).is_none() {
            return bad(format!(
                "battery.initial_soc {} is not one of the SoC levels",
                self.initial_soc
            ));
        }
        if !(self.min_discharge_soc < self.max_charge_soc) {
            return bad("battery.min_discharge_soc must be below battery.max_charge_soc".into());
        }
        if !(self.capacity_kwh > 0.0) {
            return bad(format!(
                "battery.capacity_kwh must be positive, got {}",
                self.capacity_kwh
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, DomainError> {
        Grid::from_values(self.soc_levels.clone())
    }

    /// Energy moved by one active step.
    pub fn charge_power_kwh_per_step(&self) -> f64 {
        self.capacity_kwh * self.step_fraction
    }

    pub fn is_allowed(&self, soc: f64, action: BatteryAction) -> bool {
        match action {
            BatteryAction::Off => true,
            BatteryAction::Charge => soc < self.max_charge_soc - SOC_EPS,
            BatteryAction::Discharge => soc > self.min_discharge_soc + SOC_EPS,
        }
    }

    /// Action actually carried out; masked actions become `Off`.
    pub fn effective_action(&self, soc: f64, action: BatteryAction) -> BatteryAction {
        if self.is_allowed(soc, action) {
            action
        } else {
            BatteryAction::Off
        }
    }

    pub fn next_soc(&self, soc: f64, action: BatteryAction) -> f64 {
        let next = match self.effective_action(soc, action) {
            BatteryAction::Off => soc,
            BatteryAction::Charge => soc + self.step_fraction,
            BatteryAction::Discharge => soc - self.step_fraction,
        };
        next.clamp(0.0, 1.0)
    }

    /// Signed kWh drawn by the battery: positive charging, negative discharging.
    pub fn battery_energy(&self, soc: f64, action: BatteryAction) -> f64 {
        match self.effective_action(soc, action) {
            BatteryAction::Off => 0.0,
            BatteryAction::Charge => self.charge_power_kwh_per_step(),
            BatteryAction::Discharge => -self.charge_power_kwh_per_step(),
        }
    }
}

/// Transition table over `(next_soc | soc, action)`.
pub fn soc_transition(params: &BatteryParams) -> Result<ConditionalTable, DomainError> {
    params.validate()?;
    let grid = params.grid()?;
    let n = grid.len();
    Ok(ConditionalTable::deterministic(n, vec![n, 3], |p| {
        let action = BatteryAction::from_index(p[1]).expect("three actions");
        grid.nearest(params.next_soc(grid.value(p[0]), action))
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn next(soc: f64, a: BatteryAction) -> f64 {
        let p = BatteryParams::default();
        let g = p.grid().unwrap();
        let t = soc_transition(&p).unwrap();
        let i = g.index_of(soc).unwrap();
        let s = t.slice(&[i, a.index()]);
        let j = s.iter().position(|&x| x == 1.0).unwrap();
        g.value(j)
    }

    #[test]
    fn transition_examples() {
        assert_eq!(next(0.2, BatteryAction::Charge), 0.4);
        assert_eq!(next(0.2, BatteryAction::Discharge), 0.2);
        assert_eq!(next(0.8, BatteryAction::Charge), 0.8);
        assert_eq!(next(0.6, BatteryAction::Discharge), 0.4);
        assert_eq!(next(0.4, BatteryAction::Off), 0.4);
    }

    #[test]
    fn masked_actions_move_no_energy() {
        let p = BatteryParams::default();
        assert_eq!(p.battery_energy(0.2, BatteryAction::Discharge), 0.0);
        assert_eq!(p.battery_energy(0.8, BatteryAction::Charge), 0.0);
        assert_eq!(p.battery_energy(0.4, BatteryAction::Charge), 2.0);
        assert_eq!(p.battery_energy(0.4, BatteryAction::Discharge), -2.0);
    }

    #[test]
    fn rejects_bad_params() {
        let d = BatteryParams::default();
        for bad in [
            BatteryParams {
                initial_soc: 0.3,
                ..d.clone()
            },
            BatteryParams {
                min_discharge_soc: 0.8,
                ..d.clone()
            },
            BatteryParams {
                soc_levels: vec![0.0, 0.5, 0.4],
                ..d.clone()
            },
            BatteryParams {
                capacity_kwh: 0.0,
                ..d.clone()
            },
            BatteryParams {
                step_fraction: 0.0,
                ..d
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
