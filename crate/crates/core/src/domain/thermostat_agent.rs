use super::{
    adjacent_noise_likelihood, comfort_log_preference, thermo_transition, ComfortTargets,
    DomainError, Grid, ThermoParams, ThermostatAction,
};
use crate::environment::TimeStepRow;
use crate::inference::{
    AgentModel, Categorical, ConditionalTable, DirichletTable, ExogenousForecast, FactorId, Parent,
    Preferences,
};

/// Thermostat generative model plus the lookups the simulation loop needs.
#[derive(Debug, Clone)]
pub struct ThermostatModel {
    pub model: AgentModel,
    pub params: ThermoParams,
    pub comfort: ComfortTargets,
    pub grid: Grid,
    /// Likelihood of the observed room-temperature bin.
    pub perception: ConditionalTable,
    pub room_temp: FactorId,
    pub hvac_energy: FactorId,
    /// kWh value of each `hvac_energy` bin.
    pub hvac_levels: [f64; 2],
    pub learning: bool,
}

/// Builds the thermostat model.
///
/// Factors, in update order: outdoor_temp, occupancy, tou_high (lookups of
/// the forecast), room_temp, hvac_energy, comfort. `comfort` jointly indexes
/// (room_temp, occupancy, tou_high) so that one preference vector can express
/// occupancy- and ToU-conditional targets. With `learn`, room_temp's
/// transition starts from all-ones Dirichlet counts and the initial
/// temperature belief is uniform.
pub fn build_thermostat_model(
    params: &ThermoParams,
    comfort: &ComfortTargets,
    horizon: usize,
    policy_cap: usize,
    learn: bool,
    observation_noise: f64,
) -> Result<ThermostatModel, DomainError> {
    params.validate()?;
    comfort.validate()?;
    let grid = params.grid()?;
    let n = grid.len();

    let mut b = AgentModel::builder(ThermostatAction::ALL.len(), horizon);
    b.max_policies(policy_cap);
    let outdoor_in = b.exogenous("outdoor_temp", n);
    let occupancy_in = b.exogenous("occupancy", 2);
    let tou_in = b.exogenous("tou_high", 2);

    let outdoor = b.factor("outdoor_temp", n);
    let occupancy = b.factor("occupancy", 2);
    let tou_high = b.factor("tou_high", 2);
    let room_temp = b.factor("room_temp", n);
    let hvac_energy = b.factor("hvac_energy", 2);
    let comfort_f = b.factor("comfort", n * 4);

    b.transition(
        outdoor,
        vec![Parent::Exogenous(outdoor_in)],
        false,
        ConditionalTable::identity(n),
    );
    b.transition(
        occupancy,
        vec![Parent::Exogenous(occupancy_in)],
        false,
        ConditionalTable::identity(2),
    );
    b.transition(
        tou_high,
        vec![Parent::Exogenous(tou_in)],
        false,
        ConditionalTable::identity(2),
    );

    let temp_parents = vec![Parent::Previous(room_temp), Parent::Updated(outdoor)];
    if learn {
        let counts = DirichletTable::uniform(n, vec![n, n, 3], 1.0)?;
        b.learned_transition(room_temp, temp_parents, true, counts);
        b.initial_belief(room_temp, Categorical::uniform(n));
    } else {
        b.transition(room_temp, temp_parents, true, thermo_transition(params)?);
        let start = grid
            .index_of(params.initial_temp_c)
            .expect("validated initial temperature");
        b.initial_belief(room_temp, Categorical::delta(n, start));
    }

    let hvac_table = ConditionalTable::deterministic(2, vec![3], |p| {
        usize::from(ThermostatAction::from_index(p[0]) != Some(ThermostatAction::Off))
    })?;
    b.transition(hvac_energy, vec![], true, hvac_table);

    let comfort_table =
        ConditionalTable::deterministic(n * 4, vec![n, 2, 2], |p| p[0] + n * (p[1] + 2 * p[2]))?;
    b.transition(
        comfort_f,
        vec![
            Parent::Updated(room_temp),
            Parent::Updated(occupancy),
            Parent::Updated(tou_high),
        ],
        false,
        comfort_table,
    );

    let mut comfort_prefs = vec![0.0; n * 4];
    for (i, pref) in comfort_prefs.iter_mut().enumerate() {
        let (temp, occ, tou) = (i % n, (i / n) % 2, i / (2 * n));
        *pref = comfort_log_preference(comfort, grid.value(temp), occ == 1, tou == 1);
    }
    b.modality(
        "comfort",
        comfort_f,
        ConditionalTable::identity(n * 4),
        Preferences::new(comfort_prefs)?,
    );
    let hvac_levels = [0.0, params.hvac_kwh];
    b.modality(
        "hvac_energy",
        hvac_energy,
        ConditionalTable::identity(2),
        Preferences::new(
            hvac_levels
                .iter()
                .map(|e| -comfort.hvac_energy_penalty * e)
                .collect(),
        )?,
    );

    Ok(ThermostatModel {
        model: b.build()?,
        params: params.clone(),
        comfort: comfort.clone(),
        perception: adjacent_noise_likelihood(n, observation_noise)?,
        grid,
        room_temp,
        hvac_energy,
        hvac_levels,
        learning: learn,
    })
}

impl ThermostatModel {
    pub fn outdoor_bin(&self, row: &TimeStepRow) -> usize {
        self.grid.nearest(row.outdoor_temp_c)
    }

    /// Exogenous inputs for one planning step.
    pub fn exogenous_step(&self, row: &TimeStepRow) -> Vec<Categorical> {
        let n = self.grid.len();
        vec![
            Categorical::delta(n, self.outdoor_bin(row)),
            Categorical::delta(2, usize::from(row.occupancy)),
            Categorical::delta(2, usize::from(row.tou_high)),
        ]
    }

    pub fn forecast<'a, I>(&self, rows: I) -> ExogenousForecast
    where
        I: IntoIterator<Item = &'a TimeStepRow>,
    {
        ExogenousForecast::new(rows.into_iter().map(|r| self.exogenous_step(r)).collect())
    }

    /// Predicted HVAC energy belief for each step of a rollout.
    pub fn hvac_message(&self, rollout: &[Vec<Categorical>]) -> Vec<Categorical> {
        rollout
            .iter()
            .map(|step| step[self.hvac_energy.0].clone())
            .collect()
    }

    /// Expected room temperature under a belief.
    pub fn mean_temperature(&self, belief: &Categorical) -> f64 {
        belief.expectation(self.grid.values())
    }
}
