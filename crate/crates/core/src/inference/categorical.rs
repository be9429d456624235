use super::InferenceError;

/// Probabilities below this are treated as exact zeros.
pub const FLUSH_THRESHOLD: f64 = 1e-300;

/// A normalized probability vector over a discrete variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    /// Normalizes non-negative weights into a distribution.
    pub fn new(raw: Vec<f64>) -> Result<Self, InferenceError> {
        if raw.is_empty() {
            return Err(InferenceError::Normalization("empty vector".into()));
        }
        let mut sum = 0.0;
        for (i, &p) in raw.iter().enumerate() {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(InferenceError::Normalization(format!(
                    "entry {i} is {p}, expected a finite non-negative value"
                )));
            }
            sum += p;
        }
        if sum <= 0.0 {
            return Err(InferenceError::Normalization("all entries are zero".into()));
        }
        let mut probs: Vec<f64> = raw.into_iter().map(|p| p / sum).collect();
        // Second pass absorbs the rounding left over from the first division.
        let resum: f64 = probs.iter().sum();
        if resum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= resum);
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one outcome");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn delta(n: usize, index: usize) -> Self {
        assert!(
            index < n,
            "delta index {index} out of range for {n} outcomes"
        );
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Self { probs }
    }

    /// Builds from log-weights using max-subtraction; `-inf` entries get zero mass.
    pub fn softmax(logits: &[f64]) -> Result<Self, InferenceError> {
        let max = logits
            .iter()
            .copied()
            .filter(|x| !x.is_nan())
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(InferenceError::Normalization(
                "softmax input has no finite entry".into(),
            ));
        }
        let raw = logits
            .iter()
            .map(|&x| {
                let p = (x - max).exp();
                if p < FLUSH_THRESHOLD || p.is_nan() {
                    0.0
                } else {
                    p
                }
            })
            .collect();
        Self::new(raw)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Index of the largest probability; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    /// Expectation of per-outcome values.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.probs.len());
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl AsRef<[f64]> for Categorical {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

/// Normalizes raw non-negative weights.
pub fn normalize(raw: &[f64]) -> Result<Categorical, InferenceError> {
    Categorical::new(raw.to_vec())
}

pub(crate) fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}
