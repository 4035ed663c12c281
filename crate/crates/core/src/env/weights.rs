use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::market::RelativeVector;

/// Tolerance on `|sum - 1|` for a vector to count as a portfolio.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Actions within this distance of the simplex are renormalized instead of rejected.
pub const ACTION_TOL: f64 = 1e-6;

/// Portfolio weights over cash (index 0) and `n` risky assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Accepts `w` only if it already lies on the simplex.
    pub fn new(w: Vec<f64>) -> Result<Self, EnvError> {
        if w.is_empty() || !is_on_simplex(&w, SIMPLEX_TOL) {
            return Err(EnvError::InvalidAction { sum: w.iter().sum(), len: w.len() });
        }
        Ok(WeightVector(w))
    }

    /// Validates an action from a policy. Small negative entries (down to
    /// -1e-9) are clamped to zero and a sum within [`ACTION_TOL`] of 1 is
    /// renormalized.
    pub fn from_action(mut w: Vec<f64>) -> Result<Self, EnvError> {
        let sum: f64 = w.iter().sum();
        let bad = || EnvError::InvalidAction { sum, len: w.len() };
        if w.is_empty() || w.iter().any(|x| !x.is_finite() || *x < -1e-9) || (sum - 1.0).abs() > ACTION_TOL {
            return Err(bad());
        }
        for x in w.iter_mut() {
            *x = x.max(0.0);
        }
        let total: f64 = w.iter().sum();
        for x in w.iter_mut() {
            *x /= total;
        }
        Ok(WeightVector(w))
    }

    /// All value in cash: `[1, 0, ..., 0]` over `n` risky assets.
    pub fn cash(n_assets: usize) -> Self {
        let mut w = vec![0.0; n_assets + 1];
        w[0] = 1.0;
        WeightVector(w)
    }

    /// Equal weight on every component, cash included.
    pub fn uniform(n_assets: usize) -> Self {
        WeightVector(vec![1.0 / (n_assets + 1) as f64; n_assets + 1])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, y: &RelativeVector) -> f64 {
        dot(&self.0, y.as_slice())
    }
}

fn is_on_simplex(w: &[f64], tol: f64) -> bool {
    w.iter().all(|x| (0.0..=1.0).contains(x)) && (w.iter().sum::<f64>() - 1.0).abs() <= tol
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weights after prices move by `y`: `(y * w) / (y . w)`.
pub fn drift_weights(w: &WeightVector, y: &RelativeVector) -> WeightVector {
    WeightVector(drift_slice(w.as_slice(), y.as_slice()))
}

pub(crate) fn drift_slice(w: &[f64], y: &[f64]) -> Vec<f64> {
    let growth = dot(w, y);
    w.iter().zip(y).map(|(wi, yi)| wi * yi / growth).collect()
}

/// Portfolio value after prices move by `y`: `value * (w . y)`.
pub fn drift_value(value: f64, w: &WeightVector, y: &RelativeVector) -> f64 {
    value * w.dot(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y(v: &[f64]) -> RelativeVector {
        RelativeVector(v.to_vec())
    }

    #[test]
    fn cash_never_drifts() {
        let w = WeightVector::cash(2);
        assert_eq!(drift_weights(&w, &y(&[1.0, 3.0, 0.2])), w);
        assert_eq!(drift_value(5.0, &w, &y(&[1.0, 3.0, 0.2])), 5.0);
    }

    #[test]
    fn flat_prices_leave_weights() {
        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(drift_weights(&w, &y(&[1.0, 1.0, 1.0])), w);
    }

    #[test]
    fn drift_hand_example() {
        let w = WeightVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        let out = drift_weights(&w, &y(&[1.0, 2.0, 1.0]));
        let expected = [0.0, 2.0 / 3.0, 1.0 / 3.0];
        for (a, b) in out.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn value_drift_examples() {
        let single = WeightVector::new(vec![0.0, 1.0]).unwrap();
        assert!((drift_value(1.0, &single, &y(&[1.0, 1.1])) - 1.1).abs() < 1e-15);
        let half = WeightVector::new(vec![0.5, 0.5]).unwrap();
        assert!((drift_value(100000.0, &half, &y(&[1.0, 1.2])) - 110000.0).abs() < 1e-9);
    }

    #[test]
    fn action_tolerance() {
        let w = WeightVector::from_action(vec![0.5, 0.5 + 5e-7, -1e-10]).unwrap();
        assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w.as_slice()[2], 0.0);
        assert!(WeightVector::from_action(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::from_action(vec![1.1, -0.1]).is_err());
        assert!(WeightVector::from_action(vec![f64::NAN, 1.0]).is_err());
        assert!(WeightVector::new(vec![0.5, 0.5 + 1e-7]).is_err());
    }
}
