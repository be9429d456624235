//! Factorized generative model with cascaded transitions.
//!
//! Each state factor is updated once per time step, in `update_order`. A
//! factor's transition reads its parents from three places: the previous
//! step's belief about any factor, this step's already-updated belief about a
//! factor earlier in the order, or an exogenous input supplied by the caller's
//! forecast. Observation modalities each read a single factor.

use super::{Categorical, ConditionalTable, DirichletTable, InferenceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactorId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExogenousId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModalityId(pub usize);

/// Where a transition reads one of its parent values from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parent {
    /// The factor's value at the previous time step.
    Previous(FactorId),
    /// The factor's value already updated within this time step.
    Updated(FactorId),
    /// A caller-supplied exogenous input for this time step.
    Exogenous(ExogenousId),
}

/// Log-preferences over one observation modality (the C vector).
#[derive(Debug, Clone, PartialEq)]
pub struct Preferences {
    log_prefs: Vec<f64>,
    dist: Categorical,
}

impl Preferences {
    /// `-inf` entries mark forbidden outcomes.
    pub fn new(log_prefs: Vec<f64>) -> Result<Self, InferenceError> {
        if log_prefs.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(InferenceError::InvalidModel(
                "log-preferences must be finite or -inf".into(),
            ));
        }
        let dist = Categorical::softmax(&log_prefs)?;
        Ok(Self { log_prefs, dist })
    }

    pub fn flat(n: usize) -> Self {
        Self::new(vec![0.0; n]).expect("flat preferences are valid")
    }

    pub fn log_prefs(&self) -> &[f64] {
        &self.log_prefs
    }

    /// Normalized preference distribution `p(o | C)`.
    pub fn distribution(&self) -> &Categorical {
        &self.dist
    }

    pub fn len(&self) -> usize {
        self.log_prefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_prefs.is_empty()
    }
}

/// A fixed-length sequence of action indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy(Vec<usize>);

impl Policy {
    pub fn new(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn first_action(&self) -> usize {
        self.0[0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// All `action_cardinality ^ horizon` policies in lexicographic order
/// (first action most significant).
pub fn enumerate_policies(action_cardinality: usize, horizon: usize) -> Vec<Policy> {
    let count = action_cardinality.pow(horizon as u32);
    (0..count)
        .map(|mut n| {
            let mut actions = vec![0; horizon];
            for slot in actions.iter_mut().rev() {
                *slot = n % action_cardinality;
                n /= action_cardinality;
            }
            Policy(actions)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum TransitionSource {
    Fixed(ConditionalTable),
    /// Learned counts plus their cached normalization and column novelty.
    Learned {
        counts: DirichletTable,
        table: ConditionalTable,
        novelty: Vec<f64>,
    },
}

impl TransitionSource {
    pub fn table(&self) -> &ConditionalTable {
        match self {
            TransitionSource::Fixed(t) => t,
            TransitionSource::Learned { table, .. } => table,
        }
    }

    /// Per-column parameter information gain; `None` for fixed tables.
    pub fn novelty(&self) -> Option<&[f64]> {
        match self {
            TransitionSource::Fixed(_) => None,
            TransitionSource::Learned { novelty, .. } => Some(novelty),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactorTransition {
    pub parents: Vec<Parent>,
    /// When set, the action is the table's last parent axis.
    pub action_dependent: bool,
    pub source: TransitionSource,
}

#[derive(Debug, Clone)]
pub struct StateFactor {
    pub name: String,
    pub cardinality: usize,
}

#[derive(Debug, Clone)]
pub struct ExogenousInput {
    pub name: String,
    pub cardinality: usize,
}

#[derive(Debug, Clone)]
pub struct Modality {
    pub name: String,
    pub factor: FactorId,
    pub likelihood: ConditionalTable,
    pub preferences: Preferences,
}

/// Complete generative model for one agent.
#[derive(Debug, Clone)]
pub struct AgentModel {
    factors: Vec<StateFactor>,
    exogenous: Vec<ExogenousInput>,
    transitions: Vec<FactorTransition>,
    update_order: Vec<FactorId>,
    modalities: Vec<Modality>,
    initial_beliefs: Vec<Categorical>,
    policies: Vec<Policy>,
    policy_prior: Categorical,
    horizon: usize,
    action_cardinality: usize,
    action_deltas: Vec<Vec<f64>>,
}

impl AgentModel {
    pub fn builder(action_cardinality: usize, horizon: usize) -> ModelBuilder {
        ModelBuilder {
            action_cardinality,
            horizon,
            factors: Vec::new(),
            exogenous: Vec::new(),
            transitions: Vec::new(),
            update_order: None,
            modalities: Vec::new(),
            initial_beliefs: Vec::new(),
            policy_prior: None,
            max_policies: None,
        }
    }

    pub fn factors(&self) -> &[StateFactor] {
        &self.factors
    }

    pub fn factor_id(&self, name: &str) -> Option<FactorId> {
        self.factors
            .iter()
            .position(|f| f.name == name)
            .map(FactorId)
    }

    pub fn modality_id(&self, name: &str) -> Option<ModalityId> {
        self.modalities
            .iter()
            .position(|m| m.name == name)
            .map(ModalityId)
    }

    pub fn exogenous_inputs(&self) -> &[ExogenousInput] {
        &self.exogenous
    }

    pub fn transition(&self, f: FactorId) -> &FactorTransition {
        &self.transitions[f.0]
    }

    pub fn update_order(&self) -> &[FactorId] {
        &self.update_order
    }

    pub fn modalities(&self) -> &[Modality] {
        &self.modalities
    }

    pub fn modality(&self, m: ModalityId) -> &Modality {
        &self.modalities[m.0]
    }

    pub fn initial_beliefs(&self) -> &[Categorical] {
        &self.initial_beliefs
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    pub fn policy_prior(&self) -> &Categorical {
        &self.policy_prior
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn action_cardinality(&self) -> usize {
        self.action_cardinality
    }

    pub(crate) fn action_delta(&self, action: usize) -> &[f64] {
        &self.action_deltas[action]
    }

    /// Mutable access to a learnable transition's counts.
    ///
    /// Call [`AgentModel::refresh_learned`] after mutating.
    pub fn learned_counts_mut(&mut self, f: FactorId) -> Option<&mut DirichletTable> {
        match &mut self.transitions[f.0].source {
            TransitionSource::Learned { counts, .. } => Some(counts),
            TransitionSource::Fixed(_) => None,
        }
    }

    pub fn refresh_learned(&mut self, f: FactorId) {
        if let TransitionSource::Learned {
            counts,
            table,
            novelty,
        } = &mut self.transitions[f.0].source
        {
            *table = counts.normalized();
            *novelty = counts.column_novelty();
        }
    }
}

pub struct ModelBuilder {
    action_cardinality: usize,
    horizon: usize,
    factors: Vec<StateFactor>,
    exogenous: Vec<ExogenousInput>,
    transitions: Vec<Option<FactorTransition>>,
    update_order: Option<Vec<FactorId>>,
    modalities: Vec<Modality>,
    initial_beliefs: Vec<Option<Categorical>>,
    policy_prior: Option<Categorical>,
    max_policies: Option<usize>,
}

impl ModelBuilder {
    pub fn factor(&mut self, name: &str, cardinality: usize) -> FactorId {
        self.factors.push(StateFactor {
            name: name.to_string(),
            cardinality,
        });
        self.transitions.push(None);
        self.initial_beliefs.push(None);
        FactorId(self.factors.len() - 1)
    }

    pub fn exogenous(&mut self, name: &str, cardinality: usize) -> ExogenousId {
        self.exogenous.push(ExogenousInput {
            name: name.to_string(),
            cardinality,
        });
        ExogenousId(self.exogenous.len() - 1)
    }

    pub fn transition(
        &mut self,
        factor: FactorId,
        parents: Vec<Parent>,
        action_dependent: bool,
        table: ConditionalTable,
    ) -> &mut Self {
        self.transitions[factor.0] = Some(FactorTransition {
            parents,
            action_dependent,
            source: TransitionSource::Fixed(table),
        });
        self
    }

    pub fn learned_transition(
        &mut self,
        factor: FactorId,
        parents: Vec<Parent>,
        action_dependent: bool,
        counts: DirichletTable,
    ) -> &mut Self {
        let table = counts.normalized();
        let novelty = counts.column_novelty();
        self.transitions[factor.0] = Some(FactorTransition {
            parents,
            action_dependent,
            source: TransitionSource::Learned {
                counts,
                table,
                novelty,
            },
        });
        self
    }

    pub fn modality(
        &mut self,
        name: &str,
        factor: FactorId,
        likelihood: ConditionalTable,
        preferences: Preferences,
    ) -> ModalityId {
        self.modalities.push(Modality {
            name: name.to_string(),
            factor,
            likelihood,
            preferences,
        });
        ModalityId(self.modalities.len() - 1)
    }

    pub fn initial_belief(&mut self, factor: FactorId, belief: Categorical) -> &mut Self {
        self.initial_beliefs[factor.0] = Some(belief);
        self
    }

    /// Defaults to factor declaration order when unset.
    pub fn update_order(&mut self, order: Vec<FactorId>) -> &mut Self {
        self.update_order = Some(order);
        self
    }

    /// Defaults to uniform.
    pub fn policy_prior(&mut self, prior: Categorical) -> &mut Self {
        self.policy_prior = Some(prior);
        self
    }

    pub fn max_policies(&mut self, cap: usize) -> &mut Self {
        self.max_policies = Some(cap);
        self
    }

    pub fn build(self) -> Result<AgentModel, InferenceError> {
        let invalid = |msg: String| Err(InferenceError::InvalidModel(msg));
        if self.action_cardinality == 0 {
            return invalid("action cardinality must be positive".into());
        }
        if self.horizon == 0 {
            return invalid("horizon must be at least 1".into());
        }
        let count = (self.action_cardinality as u128).checked_pow(self.horizon as u32);
        let cap = self.max_policies.unwrap_or(usize::MAX) as u128;
        match count {
            Some(n) if n <= cap => {}
            _ => {
                return invalid(format!(
                    "{}^{} policies exceeds the policy cap",
                    self.action_cardinality, self.horizon
                ))
            }
        }
        let n = self.factors.len();
        for f in &self.factors {
            if f.cardinality == 0 {
                return invalid(format!("factor {} has zero cardinality", f.name));
            }
        }

        let mut transitions = Vec::with_capacity(n);
        for (i, t) in self.transitions.into_iter().enumerate() {
            match t {
                Some(t) => transitions.push(t),
                None => {
                    return invalid(format!("factor {} has no transition", self.factors[i].name))
                }
            }
        }

        let update_order = self
            .update_order
            .unwrap_or_else(|| (0..n).map(FactorId).collect());
        let mut position = vec![usize::MAX; n];
        for (pos, f) in update_order.iter().enumerate() {
            if f.0 >= n || position[f.0] != usize::MAX {
                return invalid("update order must list every factor exactly once".into());
            }
            position[f.0] = pos;
        }
        if update_order.len() != n {
            return invalid("update order must list every factor exactly once".into());
        }

        for (i, t) in transitions.iter().enumerate() {
            let name = &self.factors[i].name;
            let table = t.source.table();
            let mut expected: Vec<usize> = Vec::with_capacity(t.parents.len() + 1);
            for p in &t.parents {
                match *p {
                    Parent::Previous(g) => {
                        if g.0 >= n {
                            return invalid(format!("{name}: unknown parent factor"));
                        }
                        expected.push(self.factors[g.0].cardinality);
                    }
                    Parent::Updated(g) => {
                        if g.0 >= n {
                            return invalid(format!("{name}: unknown parent factor"));
                        }
                        if position[g.0] >= position[i] {
                            return invalid(format!(
                                "{name} reads the updated value of {}, which is not earlier in the update order",
                                self.factors[g.0].name
                            ));
                        }
                        expected.push(self.factors[g.0].cardinality);
                    }
                    Parent::Exogenous(e) => {
                        if e.0 >= self.exogenous.len() {
                            return invalid(format!("{name}: unknown exogenous input"));
                        }
                        expected.push(self.exogenous[e.0].cardinality);
                    }
                }
            }
            if t.action_dependent {
                expected.push(self.action_cardinality);
            }
            if table.parent_cardinalities() != expected.as_slice()
                || table.child_cardinality() != self.factors[i].cardinality
            {
                return Err(InferenceError::Dimension(format!(
                    "{name}: transition table shape {:?} -> {} does not match parents {:?} -> {}",
                    table.parent_cardinalities(),
                    table.child_cardinality(),
                    expected,
                    self.factors[i].cardinality
                )));
            }
        }

        for m in &self.modalities {
            if m.factor.0 >= n {
                return invalid(format!("modality {} reads an unknown factor", m.name));
            }
            let card = self.factors[m.factor.0].cardinality;
            if m.likelihood.parent_cardinalities() != [card] {
                return Err(InferenceError::Dimension(format!(
                    "modality {}: likelihood parent axis does not match factor cardinality {card}",
                    m.name
                )));
            }
            if m.likelihood.child_cardinality() != m.preferences.len() {
                return Err(InferenceError::Dimension(format!(
                    "modality {}: {} outcomes but {} preferences",
                    m.name,
                    m.likelihood.child_cardinality(),
                    m.preferences.len()
                )));
            }
        }

        let mut initial_beliefs = Vec::with_capacity(n);
        for (i, b) in self.initial_beliefs.into_iter().enumerate() {
            let card = self.factors[i].cardinality;
            let b = b.unwrap_or_else(|| Categorical::uniform(card));
            if b.len() != card {
                return Err(InferenceError::Dimension(format!(
                    "initial belief for {} has {} entries, expected {card}",
                    self.factors[i].name,
                    b.len()
                )));
            }
            initial_beliefs.push(b);
        }

        let policies = enumerate_policies(self.action_cardinality, self.horizon);
        let policy_prior = self
            .policy_prior
            .unwrap_or_else(|| Categorical::uniform(policies.len()));
        if policy_prior.len() != policies.len() {
            return Err(InferenceError::Dimension(format!(
                "policy prior has {} entries for {} policies",
                policy_prior.len(),
                policies.len()
            )));
        }
        let action_deltas = (0..self.action_cardinality)
            .map(|a| Categorical::delta(self.action_cardinality, a).into_vec())
            .collect();

        Ok(AgentModel {
            factors: self.factors,
            exogenous: self.exogenous,
            transitions,
            update_order,
            modalities: self.modalities,
            initial_beliefs,
            policies,
            policy_prior,
            horizon: self.horizon,
            action_cardinality: self.action_cardinality,
            action_deltas,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_counts() {
        assert_eq!(enumerate_policies(3, 6).len(), 729);
        assert_eq!(enumerate_policies(3, 4).len(), 81);
        let p = enumerate_policies(3, 2);
        assert_eq!(p[0].actions(), &[0, 0]);
        assert_eq!(p[1].actions(), &[0, 1]);
        assert_eq!(p[3].actions(), &[1, 0]);
        assert_eq!(p[8].actions(), &[2, 2]);
    }

    fn two_factor() -> ModelBuilder {
        let mut b = AgentModel::builder(2, 1);
        let a = b.factor("a", 2);
        let c = b.factor("c", 2);
        b.transition(
            a,
            vec![Parent::Previous(a)],
            false,
            ConditionalTable::identity(2),
        );
        b.transition(
            c,
            vec![Parent::Updated(a)],
            false,
            ConditionalTable::identity(2),
        );
        b
    }

    #[test]
    fn rejects_out_of_order_cascade() {
        let mut b = two_factor();
        b.update_order(vec![FactorId(1), FactorId(0)]);
        assert!(matches!(b.build(), Err(InferenceError::InvalidModel(_))));
        assert!(two_factor().build().is_ok());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut b = AgentModel::builder(2, 1);
        let a = b.factor("a", 3);
        b.transition(
            a,
            vec![Parent::Previous(a)],
            true,
            ConditionalTable::identity(3),
        );
        assert!(matches!(b.build(), Err(InferenceError::Dimension(_))));
    }

    #[test]
    fn rejects_zero_horizon_and_cap() {
        let mut b = AgentModel::builder(2, 0);
        let a = b.factor("a", 2);
        b.transition(
            a,
            vec![Parent::Previous(a)],
            false,
            ConditionalTable::identity(2),
        );
        assert!(b.build().is_err());

        let mut b = AgentModel::builder(3, 6);
        let a = b.factor("a", 2);
        b.transition(
            a,
            vec![Parent::Previous(a)],
            false,
            ConditionalTable::identity(2),
        );
        b.max_policies(100);
        assert!(b.build().is_err());
    }

    #[test]
    fn preferences_normalize() {
        let p = Preferences::new(vec![0.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(p.distribution().probs(), &[1.0, 0.0]);
        assert!(Preferences::new(vec![f64::INFINITY]).is_err());
    }
}
