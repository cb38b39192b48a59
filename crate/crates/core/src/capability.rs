//! Capability hypercube data model.
//!
//! A capability vector is a point in the unit hypercube `[0, 1]^n`. The same
//! type describes an agent's capabilities and a task's requirements. The
//! dimension count `n` is a runtime value so any number of capability axes
//! (sensing, processing, ...) can be modelled.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrustError};

/// A point in `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CapabilityVector(Vec<f64>);

impl CapabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(TrustError::ZeroDimensions);
        }
        for (index, &value) in values.iter().enumerate() {
            // NaN fails the range check as well.
            if !(0.0..=1.0).contains(&value) {
                return Err(TrustError::OutOfUnitRange { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        check_dim(expected, self.dim())
    }
}

impl TryFrom<Vec<f64>> for CapabilityVector {
    type Error = TrustError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<CapabilityVector> for Vec<f64> {
    fn from(v: CapabilityVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for CapabilityVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(TrustError::DimensionMismatch { expected, actual })
    }
}

/// A task together with its capability requirements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub requirements: CapabilityVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl TaskSpec {
    pub fn new(id: impl Into<String>, requirements: CapabilityVector) -> Self {
        Self {
            id: id.into(),
            requirements,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Human,
    Robot,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentId {
    pub role: Role,
    pub name: String,
}

impl AgentId {
    pub fn human(name: impl Into<String>) -> Self {
        Self {
            role: Role::Human,
            name: name.into(),
        }
    }

    pub fn robot(name: impl Into<String>) -> Self {
        Self {
            role: Role::Robot,
            name: name.into(),
        }
    }
}

/// Per-dimension sigmoid parameters of the natural-trust kernel.
///
/// `beta` sets how sharply trust drops once a requirement exceeds the
/// capability; `zeta` is the exponent applied to each dimension's sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustParams {
    beta: Vec<f64>,
    zeta: Vec<f64>,
}

impl TrustParams {
    pub fn new(beta: Vec<f64>, zeta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(TrustError::ZeroDimensions);
        }
        check_dim(beta.len(), zeta.len())?;
        for (name, values) in [("beta", &beta), ("zeta", &zeta)] {
            for (index, &value) in values.iter().enumerate() {
                if !(value.is_finite() && value > 0.0) {
                    return Err(TrustError::NonPositiveParam { name, index, value });
                }
            }
        }
        Ok(Self { beta, zeta })
    }

    /// Same `beta` and `zeta` on every dimension.
    pub fn uniform(n: usize, beta: f64, zeta: f64) -> Result<Self> {
        Self::new(vec![beta; n], vec![zeta; n])
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }
}

/// Binary task outcome. Failure is the complement of success and is never
/// stored separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Outcome {
    Failure,
    Success,
}

impl Outcome {
    pub fn from_success(success: bool) -> Self {
        if success {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }

    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }

    /// `1.0` for success, `0.0` for failure.
    pub fn indicator(self) -> f64 {
        match self {
            Outcome::Success => 1.0,
            Outcome::Failure => 0.0,
        }
    }
}

impl From<Outcome> for u8 {
    fn from(o: Outcome) -> u8 {
        o.is_success() as u8
    }
}

impl TryFrom<u8> for Outcome {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Outcome::Failure),
            1 => Ok(Outcome::Success),
            other => Err(format!("outcome must be 0 or 1, got {other}")),
        }
    }
}

/// One observed task execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub task: TaskSpec,
    pub time: u64,
    pub outcome: Outcome,
}

impl OutcomeRecord {
    pub fn new(task: TaskSpec, time: u64, outcome: Outcome) -> Self {
        Self { task, time, outcome }
    }

    pub fn requirements(&self) -> &CapabilityVector {
        &self.task.requirements
    }
}
