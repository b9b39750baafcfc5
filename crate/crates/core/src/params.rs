use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `μ` of the parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Bit-level key for duplicate detection.
    pub fn bits(&self) -> Vec<u64> {
        self.0.iter().map(|v| v.to_bits()).collect()
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Axis-aligned box `Γ = Π [lower_k, upper_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParameterBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Config(format!(
                "parameter box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::Config(format!("invalid parameter box {lower:?} .. {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn midpoint(&self) -> ParameterVector {
        ParameterVector(self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect())
    }

    pub fn upper_corner(&self) -> ParameterVector {
        ParameterVector(self.upper.clone())
    }

    pub fn contains(&self, mu: &ParameterVector) -> bool {
        self.check(mu).is_ok()
    }

    pub fn check(&self, mu: &ParameterVector) -> Result<()> {
        if mu.dim() != self.dim() {
            return Err(Error::Shape {
                context: "parameter vector",
                expected: self.dim(),
                found: mu.dim(),
            });
        }
        for (k, ((&v, &lo), &hi)) in mu.0.iter().zip(&self.lower).zip(&self.upper).enumerate() {
            if !(lo..=hi).contains(&v) {
                return Err(Error::Domain {
                    values: mu.0.clone(),
                    coordinate: k,
                    value: v,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(())
    }

    /// One i.i.d. uniform draw per coordinate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParameterVector {
        ParameterVector(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
        )
    }
}
