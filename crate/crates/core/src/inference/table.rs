use super::{Categorical, InferenceError};

/// Tolerance for column-stochastic validation of user-supplied tables.
const SLICE_TOLERANCE: f64 = 1e-9;

/// Conditional probability table `p(child | parents...)`.
///
/// Entries are stored with the child axis fastest: the slice for one parent
/// combination is contiguous. Parent combinations are linearized row-major,
/// first parent most significant. An action axis, when present, is simply one
/// more parent.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    child: usize,
    parents: Vec<usize>,
    strides: Vec<usize>,
    entries: Vec<f64>,
}

pub(crate) fn parent_strides(parents: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; parents.len()];
    for i in (0..parents.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * parents[i + 1];
    }
    strides
}

pub(crate) fn check_shape(child: usize, parents: &[usize]) -> Result<(), InferenceError> {
    if child == 0 || parents.contains(&0) {
        return Err(InferenceError::Dimension(format!(
            "cardinalities must be positive (child {child}, parents {parents:?})"
        )));
    }
    Ok(())
}

impl ConditionalTable {
    /// Wraps raw entries, renormalizing every child slice.
    ///
    /// Slices must already sum to one within a loose tolerance; this guards
    /// against silently accepting a table laid out on the wrong axis.
    pub fn from_entries(
        child: usize,
        parents: Vec<usize>,
        entries: Vec<f64>,
    ) -> Result<Self, InferenceError> {
        check_shape(child, &parents)?;
        let combos: usize = parents.iter().product();
        if entries.len() != combos * child {
            return Err(InferenceError::Dimension(format!(
                "expected {} entries, got {}",
                combos * child,
                entries.len()
            )));
        }
        let mut entries = entries;
        for (col, slice) in entries.chunks_mut(child).enumerate() {
            if slice.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(InferenceError::Normalization(format!(
                    "parent combination {col} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = slice.iter().sum();
            if (sum - 1.0).abs() > SLICE_TOLERANCE {
                return Err(InferenceError::Normalization(format!(
                    "parent combination {col} sums to {sum}"
                )));
            }
            renormalize(slice);
        }
        let strides = parent_strides(&parents);
        Ok(Self {
            child,
            parents,
            strides,
            entries,
        })
    }

    /// Builds a table from a function returning an unnormalized child slice.
    pub fn from_fn<F>(child: usize, parents: Vec<usize>, mut f: F) -> Result<Self, InferenceError>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        check_shape(child, &parents)?;
        let combos: usize = parents.iter().product();
        let mut entries = Vec::with_capacity(combos * child);
        let mut index = vec![0; parents.len()];
        for _ in 0..combos {
            let slice = f(&index);
            if slice.len() != child {
                return Err(InferenceError::Dimension(format!(
                    "slice for {index:?} has {} entries, expected {child}",
                    slice.len()
                )));
            }
            entries.extend(Categorical::new(slice)?.into_vec());
            advance(&mut index, &parents);
        }
        let strides = parent_strides(&parents);
        Ok(Self {
            child,
            parents,
            strides,
            entries,
        })
    }

    /// Builds a one-hot table from a function mapping parents to a child index.
    pub fn deterministic<F>(
        child: usize,
        parents: Vec<usize>,
        mut f: F,
    ) -> Result<Self, InferenceError>
    where
        F: FnMut(&[usize]) -> usize,
    {
        Self::from_fn(child, parents, |idx| {
            let c = f(idx);
            let mut slice = vec![0.0; child];
            if c < child {
                slice[c] = 1.0;
            }
            slice
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::deterministic(n, vec![n], |p| p[0]).expect("identity table is valid")
    }

    pub fn child_cardinality(&self) -> usize {
        self.child
    }

    pub fn parent_cardinalities(&self) -> &[usize] {
        &self.parents
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn num_columns(&self) -> usize {
        self.entries.len() / self.child
    }

    pub fn linear_index(&self, parents: &[usize]) -> usize {
        debug_assert_eq!(parents.len(), self.parents.len());
        parents
            .iter()
            .zip(&self.strides)
            .map(|(&p, &s)| p * s)
            .sum()
    }

    pub fn column(&self, linear: usize) -> &[f64] {
        &self.entries[linear * self.child..(linear + 1) * self.child]
    }

    /// Child distribution for one fixed parent combination.
    pub fn slice(&self, parents: &[usize]) -> &[f64] {
        self.column(self.linear_index(parents))
    }

    pub fn get(&self, child: usize, parents: &[usize]) -> f64 {
        self.slice(parents)[child]
    }

    /// Expected child distribution under independent parent beliefs.
    ///
    /// Only parent values with non-zero mass are visited, so delta beliefs on
    /// most parents keep this cheap even for wide tables.
    pub fn marginalize(&self, parent_probs: &[&[f64]]) -> Result<Vec<f64>, InferenceError> {
        let mut out = vec![0.0; self.child];
        self.for_each_column(parent_probs, |linear, weight| {
            for (o, &t) in out.iter_mut().zip(self.column(linear)) {
                *o += weight * t;
            }
        })?;
        Ok(out)
    }

    /// Expectation of a per-column value under independent parent beliefs.
    pub fn expect_columns(
        &self,
        parent_probs: &[&[f64]],
        values: &[f64],
    ) -> Result<f64, InferenceError> {
        if values.len() != self.num_columns() {
            return Err(InferenceError::Dimension(format!(
                "{} column values for {} columns",
                values.len(),
                self.num_columns()
            )));
        }
        let mut acc = 0.0;
        self.for_each_column(parent_probs, |linear, weight| {
            acc += weight * values[linear]
        })?;
        Ok(acc)
    }

    /// Visits every parent combination with non-zero joint mass.
    fn for_each_column<F>(&self, parent_probs: &[&[f64]], mut f: F) -> Result<(), InferenceError>
    where
        F: FnMut(usize, f64),
    {
        if parent_probs.len() != self.parents.len() {
            return Err(InferenceError::Dimension(format!(
                "table has {} parents, got {} beliefs",
                self.parents.len(),
                parent_probs.len()
            )));
        }
        let mut supports = Vec::with_capacity(parent_probs.len());
        for (k, (probs, &card)) in parent_probs.iter().zip(&self.parents).enumerate() {
            if probs.len() != card {
                return Err(InferenceError::Dimension(format!(
                    "parent {k} has cardinality {card}, belief has {}",
                    probs.len()
                )));
            }
            let support: Vec<(usize, f64)> = probs
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, &p)| (i * self.strides[k], p))
                .collect();
            if support.is_empty() {
                return Err(InferenceError::Normalization(format!(
                    "belief for parent {k} has no mass"
                )));
            }
            supports.push(support);
        }

        let mut cursor = vec![0usize; supports.len()];
        loop {
            let mut weight = 1.0;
            let mut linear = 0;
            for (k, &c) in cursor.iter().enumerate() {
                let (offset, p) = supports[k][c];
                weight *= p;
                linear += offset;
            }
            f(linear, weight);
            // odometer step, last parent fastest
            let mut k = cursor.len();
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                cursor[k] += 1;
                if cursor[k] < supports[k].len() {
                    break;
                }
                cursor[k] = 0;
            }
        }
    }

    /// Largest deviation of any child slice sum from one.
    pub fn max_slice_error(&self) -> f64 {
        self.entries
            .chunks(self.child)
            .map(|s| (s.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn advance(index: &mut [usize], cards: &[usize]) {
    for k in (0..index.len()).rev() {
        index[k] += 1;
        if index[k] < cards[k] {
            return;
        }
        index[k] = 0;
    }
}

pub(crate) fn renormalize(slice: &mut [f64]) {
    let sum: f64 = slice.iter().sum();
    if sum > 0.0 && sum != 1.0 {
        slice.iter_mut().for_each(|p| *p /= sum);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_child_fastest() {
        let t =
            ConditionalTable::from_entries(2, vec![3], vec![1.0, 0.0, 0.5, 0.5, 0.0, 1.0]).unwrap();
        assert_eq!(t.slice(&[1]), &[0.5, 0.5]);
        assert_eq!(t.get(1, &[2]), 1.0);
    }

    #[test]
    fn rejects_non_stochastic_slices() {
        let err = ConditionalTable::from_entries(2, vec![2], vec![1.0, 0.0, 0.7, 0.7]);
        assert!(matches!(err, Err(InferenceError::Normalization(_))));
        let err = ConditionalTable::from_entries(2, vec![2], vec![1.0, 0.0]);
        assert!(matches!(err, Err(InferenceError::Dimension(_))));
    }

    #[test]
    fn marginalize_multiple_parents() {
        // child = parent0 xor parent1
        let t = ConditionalTable::deterministic(2, vec![2, 2], |p| p[0] ^ p[1]).unwrap();
        let out = t.marginalize(&[&[0.5, 0.5], &[1.0, 0.0]]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
        let out = t.marginalize(&[&[0.25, 0.75], &[0.0, 1.0]]).unwrap();
        assert_eq!(out, vec![0.75, 0.25]);
    }

    #[test]
    fn marginalize_checks_dimensions() {
        let t = ConditionalTable::identity(3);
        assert!(t.marginalize(&[&[0.5, 0.5]]).is_err());
        assert!(t.marginalize(&[]).is_err());
    }

    #[test]
    fn strides_row_major() {
        assert_eq!(parent_strides(&[4, 3, 2]), vec![6, 2, 1]);
        let t = ConditionalTable::deterministic(24, vec![4, 3, 2], |p| p[0] * 6 + p[1] * 2 + p[2])
            .unwrap();
        assert_eq!(t.get(17, &[2, 2, 1]), 1.0);
    }
}
