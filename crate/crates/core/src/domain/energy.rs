use serde::{Deserialize, Serialize};

/// Net household draw for one step.
///
/// Battery energy is signed (positive charging); solar is given as a
/// non-negative generation amount and enters negatively.
pub fn energy_accounting(baseline: f64, hvac: f64, battery: f64, solar: f64) -> f64 {
    baseline + hvac + battery - solar
}

/// Cost (negative for sale-back) and import-only emissions for one step.
pub fn cost_and_ghg(total: f64, tou_rate: f64, ghg_rate: f64) -> (f64, f64) {
    (total * tou_rate, total.max(0.0) * ghg_rate)
}

/// Discretization of the energy-accounting variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyBins {
    /// kWh spacing for baseline, solar and total energy.
    pub energy_step: f64,
    /// Currency spacing of the per-step cost grid.
    pub cost_step: f64,
    /// kg spacing of the per-step emissions grid.
    pub ghg_step: f64,
}

impl Default for EnergyBins {
    fn default() -> Self {
        Self {
            energy_step: 0.5,
            cost_step: 0.025,
            ghg_step: 0.05,
        }
    }
}
