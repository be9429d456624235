//! Two-agent perceive, learn, plan, act loop and run metrics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ScenarioConfig;
use crate::domain::{
    build_battery_model, build_thermostat_model, BatteryAction, BatteryExogenous, BatteryModel,
    DomainError, ThermostatAction, ThermostatModel,
};
use crate::environment::{
    count_days, noisy_bin, step_env, Observation, Physics, TimeStepRow, STEPS_PER_DAY,
};
use crate::inference::{
    evaluate_policies, infer_states, policy_posterior, rollout, select_policy,
    update_transition_counts, AgentModel, Categorical, ExogenousForecast, InferenceError,
    SelectionMode,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("step {step}, {agent}: {source}")]
    Inference {
        step: usize,
        agent: &'static str,
        source: InferenceError,
    },
    #[error("no time-series rows")]
    EmptyData,
    #[error("trace is empty")]
    EmptyTrace,
}

/// Summary of one agent's planning at one step, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSummary {
    pub policy: usize,
    pub g_selected: f64,
    pub novelty_selected: f64,
    /// Over feasible (finite-G) policies.
    pub g_min: f64,
    pub g_mean: f64,
    pub g_max: f64,
    pub infeasible: usize,
}

/// One simulated two-hour step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub day: usize,
    pub hour: u32,
    pub tou_high: u8,
    pub occupancy: u8,
    pub outdoor_temp_c: f64,
    pub target_temp_c: f64,
    /// Ground truth when the step begins.
    pub room_temp_start_c: f64,
    pub observed_room_temp_c: f64,
    /// Posterior mean of the thermostat's room-temperature belief.
    pub belief_room_temp_c: f64,
    pub belief_room_temp_entropy: f64,
    pub thermostat_action: ThermostatAction,
    /// Ground truth when the step ends.
    pub room_temp_c: f64,
    pub soc_start: f64,
    pub observed_soc: f64,
    pub belief_soc: f64,
    pub battery_action: BatteryAction,
    /// Action actually carried out after SoC masking.
    pub battery_action_executed: BatteryAction,
    pub soc: f64,
    pub baseline_kwh: f64,
    pub hvac_kwh: f64,
    pub battery_kwh: f64,
    pub solar_kwh: f64,
    pub total_kwh: f64,
    pub tou_rate: f64,
    pub ghg_rate: f64,
    pub cost: f64,
    pub emissions_kg: f64,
    pub cumulative_cost: f64,
    pub cumulative_emissions_kg: f64,
    /// Thermostat's predicted HVAC kWh per horizon step, `;`-separated.
    pub hvac_message_kwh: String,
    pub thermostat_policy: usize,
    pub thermostat_g: f64,
    pub thermostat_neg_g: f64,
    pub thermostat_neg_g_min: f64,
    pub thermostat_neg_g_mean: f64,
    pub thermostat_neg_g_max: f64,
    pub thermostat_infeasible: usize,
    /// Expected parameter information gain of the selected policy.
    pub thermostat_novelty: f64,
    pub battery_policy: usize,
    pub battery_g: f64,
    pub battery_neg_g: f64,
    pub battery_neg_g_min: f64,
    pub battery_neg_g_mean: f64,
    pub battery_neg_g_max: f64,
    pub battery_infeasible: usize,
}

/// Per-run metrics, all recomputable from the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub days: usize,
    pub steps: usize,
    /// Per-day sum of |room temperature - target|, °C.
    pub daily_deviation_c: Vec<f64>,
    pub daily_avg_deviation_c: f64,
    /// Same with outdoor temperature in place of room temperature.
    pub worst_case_daily_deviation_c: Vec<f64>,
    pub worst_case_daily_avg_deviation_c: f64,
    pub deviation_ratio: f64,
    /// Fraction of steps whose HVAC action points toward the target
    /// (heat only at or below it, cool only at or above it).
    pub hvac_direction_consistency: f64,
    pub total_cost: f64,
    pub total_emissions_kg: f64,
    pub charge_low_tou: usize,
    pub charge_high_tou: usize,
    pub discharge_low_tou: usize,
    pub discharge_high_tou: usize,
    pub idle_low_tou: usize,
    pub idle_high_tou: usize,
    /// Steps whose selected battery action was masked.
    pub masked_battery_actions: usize,
    pub thermostat_daily_mean_neg_g: Vec<f64>,
    pub battery_daily_mean_neg_g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub trace: Vec<StepRecord>,
    pub metrics: Metrics,
}

/// Both agents plus physics, built from one config and data set.
#[derive(Debug, Clone)]
pub struct Agents {
    pub thermostat: ThermostatModel,
    pub battery: BatteryModel,
    pub physics: Physics,
}

pub fn build_agents(
    config: &ScenarioConfig,
    rows: &[TimeStepRow],
) -> Result<Agents, SimulationError> {
    if rows.is_empty() {
        return Err(SimulationError::EmptyData);
    }
    let thermostat = build_thermostat_model(
        &config.thermo,
        &config.comfort,
        config.horizon,
        config.policy_cap,
        config.learn,
        config.noise.room_temp,
    )?;
    let exo = BatteryExogenous::from_rows(rows, &config.bins, config.thermo.hvac_kwh)?;
    let battery = build_battery_model(
        &config.battery,
        &config.battery_prefs,
        &config.bins,
        exo,
        config.horizon,
        config.policy_cap,
        config.noise.soc,
    )?;
    let physics = Physics::new(config.thermo.clone(), config.battery.clone())?;
    Ok(Agents {
        thermostat,
        battery,
        physics,
    })
}

/// Scores every policy, picks one, and summarizes the G vector.
///
/// Policies are scored by `G - novelty_weight * novelty`; novelty is zero
/// for models without learned transitions.
pub fn plan(
    model: &AgentModel,
    beliefs: &[Categorical],
    forecast: &ExogenousForecast,
    precision: f64,
    novelty_weight: f64,
    mode: SelectionMode,
    rng: &mut ChaCha8Rng,
) -> Result<PlanSummary, InferenceError> {
    let efe = evaluate_policies(model, beliefs, forecast)?;
    let g: Vec<f64> = efe.iter().map(|e| e.total).collect();
    let scores: Vec<f64> = efe
        .iter()
        .map(|e| e.total - novelty_weight * e.novelty)
        .collect();
    let posterior = policy_posterior(&scores, model.policy_prior(), precision)?;
    let policy = select_policy(&posterior, mode, rng);
    let finite: Vec<f64> = g.iter().copied().filter(|x| x.is_finite()).collect();
    Ok(PlanSummary {
        policy,
        g_selected: g[policy],
        novelty_selected: efe[policy].novelty,
        g_min: finite.iter().copied().fold(f64::INFINITY, f64::min),
        g_mean: finite.iter().sum::<f64>() / finite.len() as f64,
        g_max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        infeasible: g.len() - finite.len(),
    })
}

fn window(rows: &[TimeStepRow], start: usize, len: usize) -> Vec<&TimeStepRow> {
    (0..len).map(|k| &rows[(start + k) % rows.len()]).collect()
}

fn in_step(step: usize, agent: &'static str) -> impl Fn(InferenceError) -> SimulationError {
    move |source| SimulationError::Inference {
        step,
        agent,
        source,
    }
}

/// Runs the scenario for `config.days` days (input days repeat cyclically).
pub fn run_simulation(
    config: &ScenarioConfig,
    rows: &[TimeStepRow],
) -> Result<SimulationOutput, SimulationError> {
    let mut agents = build_agents(config, rows)?;
    let days = config.days.unwrap_or_else(|| count_days(rows).max(1));
    let steps = days * STEPS_PER_DAY;
    let horizon = config.horizon;

    let mut env_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut select_rng = ChaCha8Rng::seed_from_u64(config.seed);
    select_rng.set_stream(1);

    let physics = agents.physics.clone();
    let noise = config.noise.clone();
    let mut truth = physics.initial_truth();
    let exact = physics.exact_observation(&truth);
    let mut obs = Observation {
        room_temp_bin: noisy_bin(
            exact.room_temp_bin,
            physics.temp_grid.len(),
            noise.room_temp,
            &mut env_rng,
        ),
        soc_bin: noisy_bin(
            exact.soc_bin,
            physics.soc_grid.len(),
            noise.soc,
            &mut env_rng,
        ),
    };

    let room_temp = agents.thermostat.room_temp;
    let soc_f = agents.battery.soc;
    let mut temp_prior = agents.thermostat.model.initial_beliefs()[room_temp.0].clone();
    let mut soc_prior = agents.battery.model.initial_beliefs()[soc_f.0].clone();
    // (posterior, action, outdoor bin) of the previous step, for learning
    let mut last: Option<(Categorical, usize, usize)> = None;

    let mut trace = Vec::with_capacity(steps);
    for t in 0..steps {
        let row = &rows[t % rows.len()];
        let thermo = &mut agents.thermostat;

        let temp_post = infer_states(&temp_prior, &thermo.perception, obs.room_temp_bin)
            .map_err(in_step(t, "thermostat"))?;
        let soc_post = infer_states(&soc_prior, &agents.battery.perception, obs.soc_bin)
            .map_err(in_step(t, "battery"))?;

        if thermo.learning {
            if let Some((prev, action, outdoor_bin)) = last.take() {
                let counts = thermo
                    .model
                    .learned_counts_mut(room_temp)
                    .expect("learning model has learned counts");
                let updated = update_transition_counts(
                    counts.clone(),
                    &prev,
                    &temp_post,
                    action,
                    &[outdoor_bin],
                    config.learning_rate,
                )
                .map_err(in_step(t, "thermostat"))?;
                *counts = updated;
                thermo.model.refresh_learned(room_temp);
            }
        }

        let thermo = &agents.thermostat;
        let mut t_beliefs = thermo.model.initial_beliefs().to_vec();
        t_beliefs[room_temp.0] = temp_post.clone();
        let t_forecast = thermo.forecast(window(rows, t, horizon));
        let t_plan = plan(
            &thermo.model,
            &t_beliefs,
            &t_forecast,
            config.policy_precision,
            config.novelty_weight,
            config.action_selection,
            &mut select_rng,
        )
        .map_err(in_step(t, "thermostat"))?;
        let t_actions = thermo.model.policies()[t_plan.policy].actions().to_vec();
        let t_rollout = rollout(&thermo.model, &t_beliefs, &t_actions, &t_forecast)
            .map_err(in_step(t, "thermostat"))?;
        let message = thermo.hvac_message(&t_rollout);

        let battery = &agents.battery;
        let mut b_beliefs = battery.model.initial_beliefs().to_vec();
        b_beliefs[soc_f.0] = soc_post.clone();
        let b_forecast = battery.forecast(window(rows, t, horizon), &message);
        let b_plan = plan(
            &battery.model,
            &b_beliefs,
            &b_forecast,
            config.policy_precision,
            config.novelty_weight,
            config.action_selection,
            &mut select_rng,
        )
        .map_err(in_step(t, "battery"))?;
        let b_actions = battery.model.policies()[b_plan.policy].actions().to_vec();
        let b_rollout = rollout(&battery.model, &b_beliefs, &b_actions[..1], &b_forecast)
            .map_err(in_step(t, "battery"))?;

        let t_action = ThermostatAction::from_index(t_actions[0]).expect("three actions");
        let b_action = BatteryAction::from_index(b_actions[0]).expect("three actions");
        let start = truth.clone();
        let (next, flows, next_obs) = step_env(
            &physics,
            &truth,
            row,
            t_action,
            b_action,
            &noise,
            &mut env_rng,
        );

        let levels = thermo.hvac_levels;
        let message_kwh: Vec<String> = message
            .iter()
            .map(|q| format!("{}", q.expectation(&levels)))
            .collect();
        trace.push(StepRecord {
            step: t,
            day: t / STEPS_PER_DAY + 1,
            hour: row.time_of_day,
            tou_high: u8::from(row.tou_high),
            occupancy: u8::from(row.occupancy),
            outdoor_temp_c: row.outdoor_temp_c,
            target_temp_c: thermo.comfort.target(row.occupancy),
            room_temp_start_c: start.room_temp_c,
            observed_room_temp_c: physics.temp_grid.value(obs.room_temp_bin),
            belief_room_temp_c: thermo.mean_temperature(&temp_post),
            belief_room_temp_entropy: temp_post.entropy(),
            thermostat_action: t_action,
            room_temp_c: next.room_temp_c,
            soc_start: start.soc,
            observed_soc: physics.soc_grid.value(obs.soc_bin),
            belief_soc: battery.mean_soc(&soc_post),
            battery_action: b_action,
            battery_action_executed: flows.battery_action,
            soc: next.soc,
            baseline_kwh: flows.baseline_kwh,
            hvac_kwh: flows.hvac_kwh,
            battery_kwh: flows.battery_kwh,
            solar_kwh: flows.solar_kwh,
            total_kwh: flows.total_kwh,
            tou_rate: row.tou_rate,
            ghg_rate: row.ghg_rate,
            cost: flows.cost,
            emissions_kg: flows.emissions_kg,
            cumulative_cost: next.cumulative_cost,
            cumulative_emissions_kg: next.cumulative_emissions,
            hvac_message_kwh: message_kwh.join(";"),
            thermostat_policy: t_plan.policy,
            thermostat_g: t_plan.g_selected,
            thermostat_neg_g: -t_plan.g_selected,
            thermostat_neg_g_min: -t_plan.g_max,
            thermostat_neg_g_mean: -t_plan.g_mean,
            thermostat_neg_g_max: -t_plan.g_min,
            thermostat_infeasible: t_plan.infeasible,
            thermostat_novelty: t_plan.novelty_selected,
            battery_policy: b_plan.policy,
            battery_g: b_plan.g_selected,
            battery_neg_g: -b_plan.g_selected,
            battery_neg_g_min: -b_plan.g_max,
            battery_neg_g_mean: -b_plan.g_mean,
            battery_neg_g_max: -b_plan.g_min,
            battery_infeasible: b_plan.infeasible,
        });

        temp_prior = t_rollout[0][room_temp.0].clone();
        soc_prior = b_rollout[0][soc_f.0].clone();
        last = Some((temp_post, t_actions[0], thermo.outdoor_bin(row)));
        truth = next;
        obs = next_obs;
    }

    let metrics = compute_metrics(&trace)?;
    Ok(SimulationOutput { trace, metrics })
}

fn daily_means(trace: &[StepRecord], f: impl Fn(&StepRecord) -> f64) -> Vec<f64> {
    let days = trace.last().map_or(0, |r| r.day);
    let mut sums = vec![0.0; days];
    let mut counts = vec![0usize; days];
    for r in trace {
        sums[r.day - 1] += f(r);
        counts[r.day - 1] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| s / c.max(1) as f64)
        .collect()
}

fn daily_sums(trace: &[StepRecord], f: impl Fn(&StepRecord) -> f64) -> Vec<f64> {
    let days = trace.last().map_or(0, |r| r.day);
    let mut sums = vec![0.0; days];
    for r in trace {
        sums[r.day - 1] += f(r);
    }
    sums
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn compute_metrics(trace: &[StepRecord]) -> Result<Metrics, SimulationError> {
    if trace.is_empty() {
        return Err(SimulationError::EmptyTrace);
    }
    let daily = daily_sums(trace, |r| (r.room_temp_c - r.target_temp_c).abs());
    let worst = daily_sums(trace, |r| (r.outdoor_temp_c - r.target_temp_c).abs());
    let avg = mean(&daily);
    let worst_avg = mean(&worst);
    let consistent = trace
        .iter()
        .filter(|r| match r.thermostat_action {
            ThermostatAction::Off => true,
            ThermostatAction::Heat => r.room_temp_start_c <= r.target_temp_c,
            ThermostatAction::Cool => r.room_temp_start_c >= r.target_temp_c,
        })
        .count();
    let count = |action: BatteryAction, high: bool| {
        trace
            .iter()
            .filter(|r| r.battery_action_executed == action && (r.tou_high == 1) == high)
            .count()
    };
    let last = trace.last().expect("non-empty");
    Ok(Metrics {
        days: daily.len(),
        steps: trace.len(),
        daily_avg_deviation_c: avg,
        worst_case_daily_avg_deviation_c: worst_avg,
        deviation_ratio: if worst_avg > 0.0 {
            avg / worst_avg
        } else {
            0.0
        },
        daily_deviation_c: daily,
        worst_case_daily_deviation_c: worst,
        hvac_direction_consistency: consistent as f64 / trace.len() as f64,
        total_cost: last.cumulative_cost,
        total_emissions_kg: last.cumulative_emissions_kg,
        charge_low_tou: count(BatteryAction::Charge, false),
        charge_high_tou: count(BatteryAction::Charge, true),
        discharge_low_tou: count(BatteryAction::Discharge, false),
        discharge_high_tou: count(BatteryAction::Discharge, true),
        idle_low_tou: count(BatteryAction::Off, false),
        idle_high_tou: count(BatteryAction::Off, true),
        masked_battery_actions: trace
            .iter()
            .filter(|r| r.battery_action != r.battery_action_executed)
            .count(),
        thermostat_daily_mean_neg_g: daily_means(trace, |r| r.thermostat_neg_g),
        battery_daily_mean_neg_g: daily_means(trace, |r| r.battery_neg_g),
    })
}
