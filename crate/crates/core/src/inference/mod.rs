//! Domain-agnostic discrete active inference.
//!
//! Beliefs are [`Categorical`] vectors; likelihoods and transitions are
//! [`ConditionalTable`]s. Perception is exact Bayesian inversion of a single
//! modality, planning scores every policy by its expected free energy, and
//! transition tables can be learned from Dirichlet counts.

mod categorical;
mod dirichlet;
mod efe;
mod model;
mod policy;
mod table;

use thiserror::Error;

pub use categorical::{normalize, Categorical, FLUSH_THRESHOLD};
pub use dirichlet::{update_transition_counts, DirichletTable};
pub use efe::{
    ambiguity, cascade_step, efe_policy, evaluate_policies, expected_observations,
    expected_utility, information_gain, risk, rollout, EfeBreakdown, ExogenousForecast,
};
pub use model::{
    enumerate_policies, AgentModel, ExogenousId, ExogenousInput, FactorId, FactorTransition,
    Modality, ModalityId, ModelBuilder, Parent, Policy, Preferences, StateFactor, TransitionSource,
};
pub use policy::{policy_posterior, select_action, select_policy, SelectionMode};
pub use table::ConditionalTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("normalization failed: {0}")]
    Normalization(String),
    #[error("observation {observation} has zero probability under the prior")]
    ZeroEvidence { observation: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("forecast covers {got} steps but the horizon is {horizon}")]
    ShortForecast { got: usize, horizon: usize },
    #[error("every policy violates a hard constraint")]
    NoFeasiblePolicy,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Posterior over states after one observation: `p(o|s) * prior`, normalized.
pub fn infer_states(
    prior: &Categorical,
    likelihood: &ConditionalTable,
    observation: usize,
) -> Result<Categorical, InferenceError> {
    if likelihood.parent_cardinalities() != [prior.len()] {
        return Err(InferenceError::Dimension(format!(
            "likelihood expects {:?} states, prior has {}",
            likelihood.parent_cardinalities(),
            prior.len()
        )));
    }
    if observation >= likelihood.child_cardinality() {
        return Err(InferenceError::Dimension(format!(
            "observation {observation} out of range for {} outcomes",
            likelihood.child_cardinality()
        )));
    }
    let joint: Vec<f64> = prior
        .probs()
        .iter()
        .enumerate()
        .map(|(s, &p)| p * likelihood.get(observation, &[s]))
        .collect();
    if joint.iter().all(|&x| x == 0.0) {
        return Err(InferenceError::ZeroEvidence { observation });
    }
    Categorical::new(joint)
}

/// Next-step belief for a factor whose table is laid out as
/// `(next | self, exogenous..., action)`.
pub fn predict_states(
    belief: &Categorical,
    transition: &ConditionalTable,
    action: usize,
    exogenous_parents: &[Categorical],
) -> Result<Categorical, InferenceError> {
    let cards = transition.parent_cardinalities();
    if cards.len() != exogenous_parents.len() + 2 {
        return Err(InferenceError::Dimension(format!(
            "table has {} parents, expected self + {} exogenous + action",
            cards.len(),
            exogenous_parents.len()
        )));
    }
    let action_card = *cards.last().unwrap();
    if action >= action_card {
        return Err(InferenceError::Dimension(format!(
            "action {action} out of range for {action_card} actions"
        )));
    }
    let action_delta = Categorical::delta(action_card, action);
    let mut parents: Vec<&[f64]> = vec![belief.probs()];
    parents.extend(exogenous_parents.iter().map(Categorical::probs));
    parents.push(action_delta.probs());
    Categorical::new(transition.marginalize(&parents)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli_likelihood(p_obs0: [f64; 2]) -> ConditionalTable {
        ConditionalTable::from_entries(
            2,
            vec![2],
            vec![p_obs0[0], 1.0 - p_obs0[0], p_obs0[1], 1.0 - p_obs0[1]],
        )
        .unwrap()
    }

    #[test]
    fn infer_states_examples() {
        let post =
            infer_states(&Categorical::uniform(2), &ConditionalTable::identity(2), 0).unwrap();
        assert_eq!(post.probs(), &[1.0, 0.0]);

        let post = infer_states(
            &Categorical::uniform(2),
            &bernoulli_likelihood([0.8, 0.2]),
            0,
        )
        .unwrap();
        assert!((post.get(0) - 0.8).abs() < 1e-15);

        // p(o=1|s) = [0.2, 0.8]
        let prior = Categorical::new(vec![0.9, 0.1]).unwrap();
        let post = infer_states(&prior, &bernoulli_likelihood([0.8, 0.2]), 1).unwrap();
        assert!((post.get(0) - 0.18 / 0.26).abs() < 1e-12);
        assert!((post.get(0) - 0.6923).abs() < 1e-4);
        assert!((post.get(1) - 0.3077).abs() < 1e-4);
    }

    #[test]
    fn infer_states_errors() {
        let id = ConditionalTable::identity(2);
        assert_eq!(
            infer_states(&Categorical::delta(2, 0), &id, 1),
            Err(InferenceError::ZeroEvidence { observation: 1 })
        );
        assert!(infer_states(&Categorical::uniform(2), &id, 2).is_err());
        assert!(infer_states(&Categorical::uniform(3), &id, 0).is_err());
    }

    fn chain(f: impl Fn(usize, usize) -> usize) -> ConditionalTable {
        ConditionalTable::deterministic(2, vec![2, 2], |p| f(p[0], p[1])).unwrap()
    }

    #[test]
    fn predict_states_examples() {
        // action 1 moves 0 -> 1
        let t = chain(|s, a| if a == 1 { 1 } else { s });
        let next = predict_states(&Categorical::delta(2, 0), &t, 1, &[]).unwrap();
        assert_eq!(next.probs(), &[0.0, 1.0]);

        let t = chain(|s, _| s);
        let next = predict_states(&Categorical::uniform(2), &t, 0, &[]).unwrap();
        assert_eq!(next.probs(), &[0.5, 0.5]);

        let t = chain(|_, _| 0);
        let next = predict_states(&Categorical::uniform(2), &t, 1, &[]).unwrap();
        assert_eq!(next.probs(), &[1.0, 0.0]);

        assert!(predict_states(&Categorical::uniform(2), &t, 2, &[]).is_err());
        assert!(predict_states(&Categorical::uniform(3), &t, 0, &[]).is_err());
    }

    #[test]
    fn predict_states_with_exogenous_parent() {
        // next = exogenous value, regardless of self or action
        let t = ConditionalTable::deterministic(3, vec![3, 3, 2], |p| p[1]).unwrap();
        let exo = Categorical::new(vec![0.0, 0.25, 0.75]).unwrap();
        let next = predict_states(&Categorical::delta(3, 0), &t, 0, &[exo]).unwrap();
        assert_eq!(next.probs(), &[0.0, 0.25, 0.75]);
    }
}
