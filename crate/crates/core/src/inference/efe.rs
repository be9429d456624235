//! Expected free energy of policies under a cascaded factor model.

use std::ops::{Add, AddAssign};

use super::model::{AgentModel, Modality, Parent, Policy};
use super::{Categorical, ConditionalTable, InferenceError, Preferences};

/// Per-policy expected free energy and its two decompositions, in nats.
///
/// `total = risk + ambiguity = -info_gain - expected_utility`. Lower totals
/// are better; a hard-constraint violation gives `+inf`.
///
/// `novelty` is the expected information gain about learned transition
/// parameters. It is reported separately and is not part of `total`; it is
/// zero for models without learned transitions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EfeBreakdown {
    pub risk: f64,
    pub ambiguity: f64,
    pub info_gain: f64,
    pub expected_utility: f64,
    pub total: f64,
    pub novelty: f64,
}

impl EfeBreakdown {
    /// Contribution of one modality given the predicted belief over its factor.
    pub fn for_modality(state: &Categorical, modality: &Modality) -> Result<Self, InferenceError> {
        let q_o = expected_observations(state, &modality.likelihood)?;
        let risk = risk(&q_o, &modality.preferences)?;
        let ambiguity = ambiguity(state, &modality.likelihood)?;
        let info_gain = information_gain(state, &modality.likelihood, &q_o);
        let expected_utility = expected_utility(&q_o, &modality.preferences);
        Ok(Self {
            risk,
            ambiguity,
            info_gain,
            expected_utility,
            total: risk + ambiguity,
            novelty: 0.0,
        })
    }

    /// Discrepancy between the two decompositions; zero for infinite totals.
    pub fn identity_error(&self) -> f64 {
        if !self.total.is_finite() {
            return 0.0;
        }
        let other = -self.info_gain - self.expected_utility;
        (self.total - other).abs()
    }
}

impl Add for EfeBreakdown {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for EfeBreakdown {
    fn add_assign(&mut self, rhs: Self) {
        self.risk += rhs.risk;
        self.ambiguity += rhs.ambiguity;
        self.info_gain += rhs.info_gain;
        self.expected_utility += rhs.expected_utility;
        self.total += rhs.total;
        self.novelty += rhs.novelty;
    }
}

/// Exogenous parent beliefs for each step of the planning horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousForecast {
    steps: Vec<Vec<Categorical>>,
}

impl ExogenousForecast {
    pub fn new(steps: Vec<Vec<Categorical>>) -> Self {
        Self { steps }
    }

    /// Forecast for a model without exogenous inputs.
    pub fn empty(horizon: usize) -> Self {
        Self {
            steps: vec![Vec::new(); horizon],
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn step(&self, k: usize) -> &[Categorical] {
        &self.steps[k]
    }
}

/// `q(o) = sum_s p(o|s) q(s)`.
pub fn expected_observations(
    state_belief: &Categorical,
    likelihood: &ConditionalTable,
) -> Result<Categorical, InferenceError> {
    if likelihood.parent_cardinalities() != [state_belief.len()] {
        return Err(InferenceError::Dimension(format!(
            "likelihood expects {:?} states, belief has {}",
            likelihood.parent_cardinalities(),
            state_belief.len()
        )));
    }
    Categorical::new(likelihood.marginalize(&[state_belief.probs()])?)
}

/// `KL[q(o) || p(o|C)]`; `+inf` when predicted mass lands on a forbidden outcome.
pub fn risk(predicted_obs: &Categorical, prefs: &Preferences) -> Result<f64, InferenceError> {
    if predicted_obs.len() != prefs.len() {
        return Err(InferenceError::Dimension(format!(
            "{} predicted outcomes vs {} preferences",
            predicted_obs.len(),
            prefs.len()
        )));
    }
    let c = prefs.distribution().probs();
    let mut kl = 0.0;
    for (&q, &p) in predicted_obs.probs().iter().zip(c) {
        if q > 0.0 {
            if p == 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += q * (q.ln() - p.ln());
        }
    }
    Ok(kl.max(0.0))
}

/// `E_q(s)[H(p(o|s))]`.
pub fn ambiguity(
    state_belief: &Categorical,
    likelihood: &ConditionalTable,
) -> Result<f64, InferenceError> {
    if likelihood.parent_cardinalities() != [state_belief.len()] {
        return Err(InferenceError::Dimension(format!(
            "likelihood expects {:?} states, belief has {}",
            likelihood.parent_cardinalities(),
            state_belief.len()
        )));
    }
    Ok(state_belief
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > 0.0)
        .map(|(s, &q)| q * super::categorical::entropy(likelihood.column(s)))
        .sum())
}

/// Mutual information between states and outcomes,
/// `sum_s q(s) sum_o p(o|s) ln(p(o|s) / q(o))`.
pub fn information_gain(
    state_belief: &Categorical,
    likelihood: &ConditionalTable,
    predicted_obs: &Categorical,
) -> f64 {
    let q_o = predicted_obs.probs();
    let mut ig = 0.0;
    for (s, &qs) in state_belief.probs().iter().enumerate() {
        if qs == 0.0 {
            continue;
        }
        for (o, &a) in likelihood.column(s).iter().enumerate() {
            if a > 0.0 {
                ig += qs * a * (a.ln() - q_o[o].ln());
            }
        }
    }
    ig
}

/// `E_q(o)[ln p(o|C)]`; `-inf` when predicted mass lands on a forbidden outcome.
pub fn expected_utility(predicted_obs: &Categorical, prefs: &Preferences) -> f64 {
    let c = prefs.distribution().probs();
    let mut eu = 0.0;
    for (&q, &p) in predicted_obs.probs().iter().zip(c) {
        if q > 0.0 {
            if p == 0.0 {
                return f64::NEG_INFINITY;
            }
            eu += q * p.ln();
        }
    }
    eu
}

fn check_exogenous(model: &AgentModel, exo: &[Categorical]) -> Result<(), InferenceError> {
    let inputs = model.exogenous_inputs();
    if exo.len() != inputs.len() {
        return Err(InferenceError::Dimension(format!(
            "model has {} exogenous inputs, forecast step has {}",
            inputs.len(),
            exo.len()
        )));
    }
    for (input, belief) in inputs.iter().zip(exo) {
        if belief.len() != input.cardinality {
            return Err(InferenceError::Dimension(format!(
                "exogenous input {} has cardinality {}, forecast has {}",
                input.name,
                input.cardinality,
                belief.len()
            )));
        }
    }
    Ok(())
}

fn check_beliefs(model: &AgentModel, beliefs: &[Categorical]) -> Result<(), InferenceError> {
    if beliefs.len() != model.factors().len() {
        return Err(InferenceError::Dimension(format!(
            "model has {} factors, got {} beliefs",
            model.factors().len(),
            beliefs.len()
        )));
    }
    for (f, b) in model.factors().iter().zip(beliefs) {
        if b.len() != f.cardinality {
            return Err(InferenceError::Dimension(format!(
                "belief for {} has {} entries, expected {}",
                f.name,
                b.len(),
                f.cardinality
            )));
        }
    }
    Ok(())
}

fn cascade(
    model: &AgentModel,
    prev: &[Categorical],
    action: usize,
    exo: &[Categorical],
) -> Result<(Vec<Categorical>, f64), InferenceError> {
    let mut next: Vec<Option<Categorical>> = vec![None; prev.len()];
    let mut novelty = 0.0;
    for &f in model.update_order() {
        let t = model.transition(f);
        let mut parents: Vec<&[f64]> = Vec::with_capacity(t.parents.len() + 1);
        for p in &t.parents {
            parents.push(match *p {
                Parent::Previous(g) => prev[g.0].probs(),
                Parent::Updated(g) => next[g.0]
                    .as_ref()
                    .expect("update order validated at build time")
                    .probs(),
                Parent::Exogenous(e) => exo[e.0].probs(),
            });
        }
        if t.action_dependent {
            parents.push(model.action_delta(action));
        }
        let table = t.source.table();
        if let Some(values) = t.source.novelty() {
            novelty += table.expect_columns(&parents, values)?;
        }
        let raw = table.marginalize(&parents)?;
        next[f.0] = Some(Categorical::new(raw)?);
    }
    let next = next
        .into_iter()
        .map(|b| b.expect("every factor updated"))
        .collect();
    Ok((next, novelty))
}

/// Advances every factor belief by one step under `action`.
pub fn cascade_step(
    model: &AgentModel,
    beliefs: &[Categorical],
    action: usize,
    exogenous: &[Categorical],
) -> Result<Vec<Categorical>, InferenceError> {
    check_beliefs(model, beliefs)?;
    check_exogenous(model, exogenous)?;
    if action >= model.action_cardinality() {
        return Err(InferenceError::Dimension(format!(
            "action {action} out of range for {} actions",
            model.action_cardinality()
        )));
    }
    Ok(cascade(model, beliefs, action, exogenous)?.0)
}

fn step_efe(
    model: &AgentModel,
    beliefs: &[Categorical],
    novelty: f64,
) -> Result<EfeBreakdown, InferenceError> {
    let mut acc = EfeBreakdown {
        novelty,
        ..Default::default()
    };
    for m in model.modalities() {
        acc += EfeBreakdown::for_modality(&beliefs[m.factor.0], m)?;
    }
    Ok(acc)
}

fn check_forecast(model: &AgentModel, forecast: &ExogenousForecast) -> Result<(), InferenceError> {
    if forecast.len() < model.horizon() {
        return Err(InferenceError::ShortForecast {
            got: forecast.len(),
            horizon: model.horizon(),
        });
    }
    for k in 0..model.horizon() {
        check_exogenous(model, forecast.step(k))?;
    }
    Ok(())
}

/// Predicted factor beliefs after each step of `actions`.
pub fn rollout(
    model: &AgentModel,
    beliefs: &[Categorical],
    actions: &[usize],
    forecast: &ExogenousForecast,
) -> Result<Vec<Vec<Categorical>>, InferenceError> {
    check_beliefs(model, beliefs)?;
    if forecast.len() < actions.len() {
        return Err(InferenceError::ShortForecast {
            got: forecast.len(),
            horizon: actions.len(),
        });
    }
    let mut out = Vec::with_capacity(actions.len());
    let mut current = beliefs.to_vec();
    for (k, &a) in actions.iter().enumerate() {
        current = cascade_step(model, &current, a, forecast.step(k))?;
        out.push(current.clone());
    }
    Ok(out)
}

/// Expected free energy of one policy, summed over its steps and all modalities.
pub fn efe_policy(
    model: &AgentModel,
    beliefs: &[Categorical],
    policy: &Policy,
    forecast: &ExogenousForecast,
) -> Result<EfeBreakdown, InferenceError> {
    check_beliefs(model, beliefs)?;
    check_forecast(model, forecast)?;
    if policy.len() != model.horizon() {
        return Err(InferenceError::Dimension(format!(
            "policy length {} differs from horizon {}",
            policy.len(),
            model.horizon()
        )));
    }
    let mut acc = EfeBreakdown::default();
    let mut current = beliefs.to_vec();
    for (k, &a) in policy.actions().iter().enumerate() {
        if a >= model.action_cardinality() {
            return Err(InferenceError::Dimension(format!(
                "action {a} out of range for {} actions",
                model.action_cardinality()
            )));
        }
        let (next, novelty) = cascade(model, &current, a, forecast.step(k))?;
        acc += step_efe(model, &next, novelty)?;
        current = next;
    }
    Ok(acc)
}

/// Evaluates every policy of the model, in policy-index order.
///
/// Policies sharing a prefix share its rollout, so the work is one pass over
/// the policy tree rather than `policies x horizon` independent cascades.
pub fn evaluate_policies(
    model: &AgentModel,
    beliefs: &[Categorical],
    forecast: &ExogenousForecast,
) -> Result<Vec<EfeBreakdown>, InferenceError> {
    check_beliefs(model, beliefs)?;
    check_forecast(model, forecast)?;
    let mut out = Vec::with_capacity(model.policies().len());
    descend(
        model,
        beliefs,
        forecast,
        0,
        EfeBreakdown::default(),
        &mut out,
    )?;
    Ok(out)
}

fn descend(
    model: &AgentModel,
    beliefs: &[Categorical],
    forecast: &ExogenousForecast,
    depth: usize,
    acc: EfeBreakdown,
    out: &mut Vec<EfeBreakdown>,
) -> Result<(), InferenceError> {
    if depth == model.horizon() {
        out.push(acc);
        return Ok(());
    }
    for a in 0..model.action_cardinality() {
        let (next, novelty) = cascade(model, beliefs, a, forecast.step(depth))?;
        let here = acc + step_efe(model, &next, novelty)?;
        descend(model, &next, forecast, depth + 1, here, out)?;
    }
    Ok(())
}
