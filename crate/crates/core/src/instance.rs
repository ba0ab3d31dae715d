//! A chasing instance: start point, feasible set and request sequence.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::functions::ConvexFunction;
use crate::geometry::{check_dim, FeasibleSet, Point};
use crate::{Error, Result};

/// Free-form provenance carried alongside an instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prng: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub start: Point,
    pub feasible: FeasibleSet,
    pub functions: Vec<ConvexFunction>,
    pub metadata: Metadata,
}

impl Instance {
    /// Builds an instance and checks dimensions and `start ∈ K`.
    pub fn new(start: Point, feasible: FeasibleSet, functions: Vec<ConvexFunction>) -> Result<Self> {
        let inst = Instance { start, feasible, functions, metadata: Metadata::default() };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    /// Number of requests `T`.
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidSet("instance dimension must be positive".into()));
        }
        if let Some(k) = self.feasible.ambient_dim() {
            if k != d {
                return Err(Error::dims(d, k));
            }
        }
        self.feasible.validate()?;
        let violation = self.feasible.violation(&self.start);
        if violation > 1e-9 * (1.0 + self.start.norm()) {
            return Err(Error::InvalidSet(format!("start lies {violation:e} outside the feasible set")));
        }
        for f in &self.functions {
            if f.dim() != d {
                return Err(Error::dims(d, f.dim()));
            }
        }
        Ok(())
    }

    /// `Σ_t |y_t - y_{t-1}| + f_t(y_t)` with `y_0 = start`.
    pub fn cost_of(&self, trajectory: &[Point]) -> Result<f64> {
        if trajectory.len() != self.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: trajectory.len() });
        }
        let mut prev = &self.start;
        let mut total = 0.0;
        for (f, y) in self.functions.iter().zip(trajectory) {
            check_dim(self.dim(), y)?;
            total += (y - prev).norm() + f.evaluate(y)?;
            prev = y;
        }
        Ok(total)
    }
}
