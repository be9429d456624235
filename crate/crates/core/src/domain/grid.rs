use super::DomainError;

/// Sorted bin centers; continuous values map to the nearest center.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    values: Vec<f64>,
}

impl Grid {
    /// Centers `min, min + step, ..., max`; `(max - min) / step` must be integral.
    pub fn uniform(min: f64, max: f64, step: f64) -> Result<Self, DomainError> {
        if !(step > 0.0) || !min.is_finite() || !max.is_finite() || min > max {
            return Err(DomainError::InvalidParams(format!(
                "grid [{min}, {max}] with step {step} is not valid"
            )));
        }
        let span = (max - min) / step;
        let n = span.round();
        if (span - n).abs() > 1e-6 {
            return Err(DomainError::InvalidParams(format!(
                "grid span {} is not a multiple of step {step}",
                max - min
            )));
        }
        let values = (0..=n as usize).map(|i| min + i as f64 * step).collect();
        Ok(Self { values })
    }

    /// Grid over integer multiples of `step` covering `[lo, hi]`, so zero is a center.
    pub fn covering(lo: f64, hi: f64, step: f64) -> Result<Self, DomainError> {
        if !(step > 0.0) {
            return Err(DomainError::InvalidParams(format!(
                "step {step} must be positive"
            )));
        }
        let lo_k = (lo / step + 1e-9).floor() as i64;
        let hi_k = (hi / step - 1e-9).ceil() as i64;
        let hi_k = hi_k.max(lo_k);
        Ok(Self {
            values: (lo_k..=hi_k).map(|k| k as f64 * step).collect(),
        })
    }

    /// Arbitrary strictly increasing centers.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self, DomainError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(DomainError::InvalidParams(
                "grid needs finite values".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Index of the nearest center, clamped to the grid ends.
    ///
    /// Exact midpoints go to the upper center.
    pub fn nearest(&self, x: f64) -> usize {
        let v = &self.values;
        let i = v.partition_point(|&c| c < x);
        if i == 0 {
            return 0;
        }
        if i == v.len() {
            return v.len() - 1;
        }
        let below = x - v[i - 1];
        let above = v[i] - x;
        // relative slack keeps 23.5-style midpoints stable under rounding noise
        let slack = 1e-9 * (v[i] - v[i - 1]);
        if below + slack < above {
            i - 1
        } else {
            i
        }
    }

    /// Index of a value that must lie on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.nearest(x);
        let tol = 1e-9 * (1.0 + x.abs());
        ((self.values[i] - x).abs() <= tol).then_some(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_temperature_grid() {
        let g = Grid::uniform(8.0, 32.0, 1.0).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.nearest(22.0), 14);
        assert_eq!(g.value(g.nearest(23.5)), 24.0);
        assert_eq!(g.value(g.nearest(23.49)), 23.0);
        assert_eq!(g.nearest(-5.0), 0);
        assert_eq!(g.nearest(99.0), 24);
        assert!(Grid::uniform(8.0, 32.0, 0.7).is_err());
    }

    #[test]
    fn covering_contains_zero() {
        let g = Grid::covering(-5.5, 7.2, 0.5).unwrap();
        assert_eq!(g.min(), -5.5);
        assert_eq!(g.max(), 7.5);
        assert!(g.index_of(0.0).is_some());
    }

    #[test]
    fn explicit_values() {
        let g = Grid::from_values(vec![0.45, 0.15, 0.15]).unwrap();
        assert_eq!(g.values(), &[0.15, 0.45]);
        assert_eq!(g.index_of(0.45), Some(1));
        assert_eq!(g.index_of(0.3), None);
    }
}
