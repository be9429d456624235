use super::table::{check_shape, parent_strides};
use super::{Categorical, ConditionalTable, InferenceError};

/// Dirichlet pseudo-counts with the same layout as a [`ConditionalTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletTable {
    child: usize,
    parents: Vec<usize>,
    strides: Vec<usize>,
    concentrations: Vec<f64>,
}

impl DirichletTable {
    /// Every concentration set to `value`; `value = 1.0` is the flat prior.
    pub fn uniform(child: usize, parents: Vec<usize>, value: f64) -> Result<Self, InferenceError> {
        check_shape(child, &parents)?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(InferenceError::InvalidModel(format!(
                "concentration must be positive, got {value}"
            )));
        }
        let n = child * parents.iter().product::<usize>();
        let strides = parent_strides(&parents);
        Ok(Self {
            child,
            parents,
            strides,
            concentrations: vec![value; n],
        })
    }

    pub fn child_cardinality(&self) -> usize {
        self.child
    }

    pub fn parent_cardinalities(&self) -> &[usize] {
        &self.parents
    }

    pub fn concentrations(&self) -> &[f64] {
        &self.concentrations
    }

    pub fn get(&self, child: usize, parents: &[usize]) -> f64 {
        let linear: usize = parents.iter().zip(&self.strides).map(|(p, s)| p * s).sum();
        self.concentrations[linear * self.child + child]
    }

    /// Posterior-mean transition table.
    pub fn normalized(&self) -> ConditionalTable {
        let mut entries = self.concentrations.clone();
        for slice in entries.chunks_mut(self.child) {
            let sum: f64 = slice.iter().sum();
            slice.iter_mut().for_each(|c| *c /= sum);
        }
        ConditionalTable::from_entries(self.child, self.parents.clone(), entries)
            .expect("positive concentrations normalize to a valid table")
    }

    /// Per-column parameter information gain, `(K - 1) / sum(column)`.
    ///
    /// This is the expected-novelty term for a Dirichlet column: the
    /// expectation of `1/a - 1/sum` under the column's own predictive
    /// distribution. It shrinks as the column accumulates counts.
    pub fn column_novelty(&self) -> Vec<f64> {
        let k = (self.child - 1) as f64;
        self.concentrations
            .chunks(self.child)
            .map(|c| k / c.iter().sum::<f64>())
            .collect()
    }

    /// Adds `lr * child[c] * prod_k parents[k][i_k]` to every cell.
    pub fn accumulate(
        &mut self,
        parent_probs: &[&[f64]],
        child: &[f64],
        learning_rate: f64,
    ) -> Result<(), InferenceError> {
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return Err(InferenceError::InvalidModel(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if child.len() != self.child || parent_probs.len() != self.parents.len() {
            return Err(InferenceError::Dimension(
                "update beliefs do not match the count table".into(),
            ));
        }
        for (k, (p, &card)) in parent_probs.iter().zip(&self.parents).enumerate() {
            if p.len() != card {
                return Err(InferenceError::Dimension(format!(
                    "parent {k} has cardinality {card}, belief has {}",
                    p.len()
                )));
            }
        }
        let supports: Vec<Vec<(usize, f64)>> = parent_probs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                p.iter()
                    .enumerate()
                    .filter(|(_, &x)| x > 0.0)
                    .map(|(i, &x)| (i * self.strides[k], x))
                    .collect()
            })
            .collect();
        if supports.iter().any(Vec::is_empty) {
            return Ok(());
        }
        let mut cursor = vec![0usize; supports.len()];
        'outer: loop {
            let mut weight = learning_rate;
            let mut linear = 0;
            for (k, &c) in cursor.iter().enumerate() {
                weight *= supports[k][c].1;
                linear += supports[k][c].0;
            }
            let base = linear * self.child;
            for (c, &q) in child.iter().enumerate() {
                self.concentrations[base + c] += weight * q;
            }
            let mut k = cursor.len();
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                cursor[k] += 1;
                if cursor[k] < supports[k].len() {
                    break;
                }
                cursor[k] = 0;
            }
        }
        Ok(())
    }
}

/// Accumulates one observed transition into a table laid out as
/// `(child | self, exogenous..., action)`.
///
/// Exogenous parents are observed exactly and enter as indices.
pub fn update_transition_counts(
    mut counts: DirichletTable,
    prev_belief: &Categorical,
    post_belief: &Categorical,
    action: usize,
    exogenous_parents: &[usize],
    learning_rate: f64,
) -> Result<DirichletTable, InferenceError> {
    let cards = counts.parent_cardinalities().to_vec();
    if cards.len() != exogenous_parents.len() + 2 {
        return Err(InferenceError::Dimension(format!(
            "table has {} parents, update supplies {}",
            cards.len(),
            exogenous_parents.len() + 2
        )));
    }
    let mut owned: Vec<Vec<f64>> = Vec::with_capacity(cards.len());
    owned.push(prev_belief.probs().to_vec());
    for (k, &idx) in exogenous_parents.iter().enumerate() {
        let card = cards[k + 1];
        if idx >= card {
            return Err(InferenceError::Dimension(format!(
                "exogenous index {idx} out of range for cardinality {card}"
            )));
        }
        owned.push(Categorical::delta(card, idx).into_vec());
    }
    let action_card = *cards.last().unwrap();
    if action >= action_card {
        return Err(InferenceError::Dimension(format!(
            "action {action} out of range for {action_card} actions"
        )));
    }
    owned.push(Categorical::delta(action_card, action).into_vec());
    let refs: Vec<&[f64]> = owned.iter().map(Vec::as_slice).collect();
    counts.accumulate(&refs, post_belief.probs(), learning_rate)?;
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> DirichletTable {
        // 2 states, 2 actions, no exogenous parents
        DirichletTable::uniform(2, vec![2, 2], 1.0).unwrap()
    }

    #[test]
    fn single_cell_increment() {
        let t = update_transition_counts(
            flat(),
            &Categorical::delta(2, 0),
            &Categorical::delta(2, 1),
            1,
            &[],
            1.0,
        )
        .unwrap();
        assert_eq!(t.get(1, &[0, 1]), 2.0);
        let total: f64 = t.concentrations().iter().sum();
        assert_eq!(total, 9.0);
    }

    #[test]
    fn scaled_increment() {
        let t = update_transition_counts(
            flat(),
            &Categorical::delta(2, 0),
            &Categorical::delta(2, 1),
            1,
            &[],
            0.5,
        )
        .unwrap();
        assert_eq!(t.get(1, &[0, 1]), 1.5);
    }

    #[test]
    fn rejects_bad_learning_rate() {
        let r = update_transition_counts(
            flat(),
            &Categorical::delta(2, 0),
            &Categorical::delta(2, 1),
            0,
            &[],
            0.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn exogenous_axis_is_indexed() {
        let t = DirichletTable::uniform(2, vec![2, 3, 2], 1.0).unwrap();
        let t = update_transition_counts(
            t,
            &Categorical::uniform(2),
            &Categorical::delta(2, 0),
            0,
            &[2],
            1.0,
        )
        .unwrap();
        assert_eq!(t.get(0, &[0, 2, 0]), 1.5);
        assert_eq!(t.get(0, &[1, 2, 0]), 1.5);
        assert_eq!(t.get(0, &[0, 1, 0]), 1.0);
    }

    #[test]
    fn normalized_matches_counts() {
        let t = update_transition_counts(
            flat(),
            &Categorical::delta(2, 0),
            &Categorical::delta(2, 1),
            1,
            &[],
            2.0,
        )
        .unwrap();
        let n = t.normalized();
        assert_eq!(n.slice(&[0, 1]), &[0.25, 0.75]);
        assert_eq!(n.slice(&[1, 1]), &[0.5, 0.5]);
    }
}
