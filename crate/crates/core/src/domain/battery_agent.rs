use super::{
    adjacent_noise_likelihood, soc_transition, BatteryAction, BatteryParams, BatteryPreferences,
    DomainError, EnergyBins, Grid,
};
use crate::environment::TimeStepRow;
use crate::inference::{
    AgentModel, Categorical, ConditionalTable, ExogenousForecast, FactorId, Parent, Preferences,
};

/// Discretization of the battery agent's exogenous inputs, derived from the
/// time series so every row maps onto a bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryExogenous {
    pub tou_rates: Grid,
    pub ghg_rates: Grid,
    pub baseline: Grid,
    pub solar: Grid,
    /// kWh of each HVAC-energy bin, matching the thermostat's message.
    pub hvac_levels: [f64; 2],
}

impl BatteryExogenous {
    pub fn from_rows(
        rows: &[TimeStepRow],
        bins: &EnergyBins,
        hvac_kwh: f64,
    ) -> Result<Self, DomainError> {
        if rows.is_empty() {
            return Err(DomainError::InvalidParams("no time-series rows".into()));
        }
        if !(bins.energy_step > 0.0 && bins.cost_step > 0.0 && bins.ghg_step > 0.0) {
            return Err(DomainError::InvalidParams(
                "bins steps must be positive".into(),
            ));
        }
        let max = |f: fn(&TimeStepRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
        Ok(Self {
            tou_rates: Grid::from_values(rows.iter().map(|r| r.tou_rate).collect())?,
            ghg_rates: Grid::from_values(rows.iter().map(|r| r.ghg_rate).collect())?,
            baseline: Grid::covering(0.0, max(|r| r.baseline_kwh), bins.energy_step)?,
            solar: Grid::covering(0.0, max(|r| r.solar_kwh), bins.energy_step)?,
            hvac_levels: [0.0, hvac_kwh],
        })
    }
}

/// Battery generative model plus the lookups the simulation loop needs.
#[derive(Debug, Clone)]
pub struct BatteryModel {
    pub model: AgentModel,
    pub params: BatteryParams,
    pub preferences: BatteryPreferences,
    pub soc_grid: Grid,
    pub exogenous: BatteryExogenous,
    pub total_grid: Grid,
    pub cost_grid: Grid,
    pub ghg_grid: Grid,
    /// Likelihood of the observed SoC bin.
    pub perception: ConditionalTable,
    pub soc: FactorId,
    pub battery_energy: FactorId,
}

/// Builds the battery model.
///
/// Update order: ToU, rate, baseline, solar and HVAC lookups; then
/// battery_energy, dispatch and soc from the previous SoC and the action;
/// then total energy; then cost and GHG. Preferences fall linearly in step
/// cost and emissions, penalize cycling, and give attempted forbidden
/// dispatch zero probability. Zero-weight preferences add no modality.
pub fn build_battery_model(
    params: &BatteryParams,
    prefs: &BatteryPreferences,
    bins: &EnergyBins,
    exo: BatteryExogenous,
    horizon: usize,
    policy_cap: usize,
    observation_noise: f64,
) -> Result<BatteryModel, DomainError> {
    params.validate()?;
    prefs.validate()?;
    let soc_grid = params.grid()?;
    let n_soc = soc_grid.len();
    let power = params.charge_power_kwh_per_step();

    let mut b = AgentModel::builder(BatteryAction::ALL.len(), horizon);
    b.max_policies(policy_cap);
    let lookups = [
        ("tou_high", 2),
        ("tou_rate", exo.tou_rates.len()),
        ("ghg_rate", exo.ghg_rates.len()),
        ("baseline", exo.baseline.len()),
        ("solar", exo.solar.len()),
        ("hvac_energy", 2),
    ];
    let mut lookup_ids = Vec::new();
    for (name, card) in lookups {
        let input = b.exogenous(name, card);
        let f = b.factor(name, card);
        b.transition(
            f,
            vec![Parent::Exogenous(input)],
            false,
            ConditionalTable::identity(card),
        );
        lookup_ids.push(f);
    }
    let [_, tou_rate, ghg_rate, baseline, solar, hvac] = lookup_ids[..] else {
        unreachable!("six lookups declared above")
    };

    // bins: discharge, idle, charge
    let energy_levels = [-power, 0.0, power];
    let battery_energy = b.factor("battery_energy", 3);
    let dispatch = b.factor("dispatch", 2);
    let soc = b.factor("soc", n_soc);

    let energy_table = ConditionalTable::deterministic(3, vec![n_soc, 3], |p| {
        let action = BatteryAction::from_index(p[1]).expect("three actions");
        match params.effective_action(soc_grid.value(p[0]), action) {
            BatteryAction::Discharge => 0,
            BatteryAction::Off => 1,
            BatteryAction::Charge => 2,
        }
    })?;
    b.transition(
        battery_energy,
        vec![Parent::Previous(soc)],
        true,
        energy_table,
    );
    let dispatch_table = ConditionalTable::deterministic(2, vec![n_soc, 3], |p| {
        let action = BatteryAction::from_index(p[1]).expect("three actions");
        usize::from(!params.is_allowed(soc_grid.value(p[0]), action))
    })?;
    b.transition(dispatch, vec![Parent::Previous(soc)], true, dispatch_table);
    b.transition(
        soc,
        vec![Parent::Previous(soc)],
        true,
        soc_transition(params)?,
    );
    let start = soc_grid
        .index_of(params.initial_soc)
        .expect("validated initial soc");
    b.initial_belief(soc, Categorical::delta(n_soc, start));

    let lo = -power - exo.solar.max();
    let hi = exo.baseline.max() + exo.hvac_levels[1] + power;
    let total_grid = Grid::covering(lo, hi, bins.energy_step)?;
    let total = b.factor("total_energy", total_grid.len());
    let total_table = ConditionalTable::deterministic(
        total_grid.len(),
        vec![exo.baseline.len(), 2, 3, exo.solar.len()],
        |p| {
            total_grid.nearest(super::energy_accounting(
                exo.baseline.value(p[0]),
                exo.hvac_levels[p[1]],
                energy_levels[p[2]],
                exo.solar.value(p[3]),
            ))
        },
    )?;
    b.transition(
        total,
        vec![
            Parent::Updated(baseline),
            Parent::Updated(hvac),
            Parent::Updated(battery_energy),
            Parent::Updated(solar),
        ],
        false,
        total_table,
    );

    let max_rate = exo.tou_rates.max();
    let cost_grid = Grid::covering(
        lo.min(0.0) * max_rate,
        hi.max(0.0) * max_rate,
        bins.cost_step,
    )?;
    let cost = b.factor("cost", cost_grid.len());
    let cost_table = ConditionalTable::deterministic(
        cost_grid.len(),
        vec![total_grid.len(), exo.tou_rates.len()],
        |p| {
            let (c, _) =
                super::cost_and_ghg(total_grid.value(p[0]), exo.tou_rates.value(p[1]), 0.0);
            cost_grid.nearest(c)
        },
    )?;
    b.transition(
        cost,
        vec![Parent::Updated(total), Parent::Updated(tou_rate)],
        false,
        cost_table,
    );

    let ghg_grid = Grid::covering(0.0, hi.max(0.0) * exo.ghg_rates.max(), bins.ghg_step)?;
    let ghg = b.factor("ghg", ghg_grid.len());
    let ghg_table = ConditionalTable::deterministic(
        ghg_grid.len(),
        vec![total_grid.len(), exo.ghg_rates.len()],
        |p| {
            let (_, g) =
                super::cost_and_ghg(total_grid.value(p[0]), 0.0, exo.ghg_rates.value(p[1]));
            ghg_grid.nearest(g)
        },
    )?;
    b.transition(
        ghg,
        vec![Parent::Updated(total), Parent::Updated(ghg_rate)],
        false,
        ghg_table,
    );

    if prefs.cycling_penalty > 0.0 {
        let c = prefs.cycling_penalty;
        b.modality(
            "battery_energy",
            battery_energy,
            ConditionalTable::identity(3),
            Preferences::new(vec![-c, 0.0, -c])?,
        );
    }
    if prefs.hard_constraints {
        b.modality(
            "dispatch",
            dispatch,
            ConditionalTable::identity(2),
            Preferences::new(vec![0.0, f64::NEG_INFINITY])?,
        );
    }
    if prefs.cost_precision > 0.0 {
        let p = cost_grid
            .values()
            .iter()
            .map(|c| -prefs.cost_precision * c)
            .collect();
        b.modality(
            "cost",
            cost,
            ConditionalTable::identity(cost_grid.len()),
            Preferences::new(p)?,
        );
    }
    if prefs.ghg_precision > 0.0 {
        let p = ghg_grid
            .values()
            .iter()
            .map(|g| -prefs.ghg_precision * g)
            .collect();
        b.modality(
            "ghg",
            ghg,
            ConditionalTable::identity(ghg_grid.len()),
            Preferences::new(p)?,
        );
    }

    Ok(BatteryModel {
        model: b.build()?,
        params: params.clone(),
        preferences: prefs.clone(),
        perception: adjacent_noise_likelihood(n_soc, observation_noise)?,
        soc_grid,
        exogenous: exo,
        total_grid,
        cost_grid,
        ghg_grid,
        soc,
        battery_energy,
    })
}

impl BatteryModel {
    /// Exogenous inputs for one planning step, with the thermostat's
    /// predicted HVAC energy for that step.
    pub fn exogenous_step(&self, row: &TimeStepRow, hvac: &Categorical) -> Vec<Categorical> {
        let e = &self.exogenous;
        let delta = |g: &Grid, x: f64| Categorical::delta(g.len(), g.nearest(x));
        vec![
            Categorical::delta(2, usize::from(row.tou_high)),
            delta(&e.tou_rates, row.tou_rate),
            delta(&e.ghg_rates, row.ghg_rate),
            delta(&e.baseline, row.baseline_kwh),
            delta(&e.solar, row.solar_kwh),
            hvac.clone(),
        ]
    }

    pub fn forecast<'a, I>(&self, rows: I, hvac_message: &[Categorical]) -> ExogenousForecast
    where
        I: IntoIterator<Item = &'a TimeStepRow>,
    {
        ExogenousForecast::new(
            rows.into_iter()
                .zip(hvac_message)
                .map(|(r, h)| self.exogenous_step(r, h))
                .collect(),
        )
    }

    pub fn mean_soc(&self, belief: &Categorical) -> f64 {
        belief.expectation(self.soc_grid.values())
    }
}
