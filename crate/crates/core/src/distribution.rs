use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A probability distribution over sample positions (the boosting weights).
#[derive(Clone, Debug, PartialEq)]
pub struct SampleDistribution {
    weights: Vec<f64>,
}

impl SampleDistribution {
    /// Validates an already normalized weight vector.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("distribution over zero samples"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::input(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::input(format!("weights sum to {total}, not 1")));
        }
        Ok(SampleDistribution { weights })
    }

    /// Normalizes nonnegative weights with a positive total.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::input(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::input("weights have no positive mass"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        SampleDistribution::new(weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("distribution over zero samples"));
        }
        Ok(SampleDistribution {
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Edge `Σ wᵢ·aᵢ` of a vector of agreements `aᵢ = yᵢ·h(xᵢ)`.
    pub fn edge_of(&self, agreements: &[i8]) -> f64 {
        self.weights
            .iter()
            .zip(agreements)
            .map(|(w, &a)| w * f64::from(a))
            .sum()
    }

    pub(crate) fn from_raw_unchecked(weights: Vec<f64>) -> Self {
        SampleDistribution { weights }
    }
}
