//! Trust models that can be fitted to ratings.
//!
//! A model maps an unconstrained parameter vector to its parameters and
//! predicts a trust value for a prepared trial record. The same optimizer
//! and loss drive every model.

use serde::{Deserialize, Serialize};

use crate::belief::UniformBelief;
use crate::capability::{CapabilityVector, Outcome, TrustParams};
use crate::error::Result;
use crate::trust::{trust_integral, DEFAULT_BINS_PER_DIM};

use super::TrialRecord;

/// A trial record with its parameter-independent work done up front: the
/// belief after all observations and the observed outcome sequence.
#[derive(Debug, Clone)]
pub struct PreparedRecord {
    pub belief: UniformBelief,
    pub target: CapabilityVector,
    pub outcomes: Vec<Outcome>,
    pub rating: f64,
}

impl PreparedRecord {
    pub fn new(record: &TrialRecord) -> Result<Self> {
        record.validate()?;
        let belief = UniformBelief::init(record.dim())?.update_all(&record.observations)?;
        Ok(Self {
            belief,
            target: record.prediction_requirements()?.clone(),
            outcomes: record.observations.iter().map(|o| o.outcome).collect(),
            rating: record.trust_rating,
        })
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }
}

/// Weights of the task-agnostic linear trust-dynamics baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineWeights {
    pub bias: f64,
    pub success: f64,
    pub failure: f64,
}

impl BaselineWeights {
    pub const INITIAL_TRUST: f64 = 0.5;

    /// Runs the trust state over an outcome sequence.
    pub fn predict(&self, outcomes: &[Outcome]) -> f64 {
        outcomes.iter().fold(Self::INITIAL_TRUST, |tau, o| {
            let step = if o.is_success() { self.success } else { self.failure };
            (tau + self.bias + step).clamp(0.0, 1.0)
        })
    }
}

/// Fitted parameters of either model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Btm(TrustParams),
    Opt(BaselineWeights),
}

pub trait TrustModel: Sync {
    type Params: Clone + Send + Sync + Into<ModelParams>;

    /// Short label used in reports.
    fn name(&self) -> &'static str;

    fn initial_theta(&self, dim: usize) -> Vec<f64>;

    fn decode(&self, theta: &[f64]) -> Result<Self::Params>;

    fn predict(&self, record: &PreparedRecord, params: &Self::Params) -> f64;
}

/// The capability-based trust model, parameterised by `ln beta` and `ln zeta`.
#[derive(Debug, Clone)]
pub struct BtmModel {
    pub bins_per_dim: usize,
    pub initial_beta: f64,
    pub initial_zeta: f64,
}

impl Default for BtmModel {
    fn default() -> Self {
        Self {
            bins_per_dim: DEFAULT_BINS_PER_DIM,
            initial_beta: 5.0,
            initial_zeta: 1.0,
        }
    }
}

// Keeps exp(theta) finite and strictly positive.
const LOG_PARAM_LIMIT: f64 = 30.0;

impl From<TrustParams> for ModelParams {
    fn from(p: TrustParams) -> Self {
        ModelParams::Btm(p)
    }
}

impl From<BaselineWeights> for ModelParams {
    fn from(w: BaselineWeights) -> Self {
        ModelParams::Opt(w)
    }
}

impl BtmModel {
    pub fn encode(params: &TrustParams) -> Vec<f64> {
        params.beta().iter().chain(params.zeta()).map(|v| v.ln()).collect()
    }
}

impl TrustModel for BtmModel {
    type Params = TrustParams;

    fn name(&self) -> &'static str {
        "BTM"
    }

    fn initial_theta(&self, dim: usize) -> Vec<f64> {
        let mut theta = vec![self.initial_beta.ln(); dim];
        theta.extend(std::iter::repeat_n(self.initial_zeta.ln(), dim));
        theta
    }

    fn decode(&self, theta: &[f64]) -> Result<TrustParams> {
        let n = theta.len() / 2;
        let exp = |v: &f64| v.clamp(-LOG_PARAM_LIMIT, LOG_PARAM_LIMIT).exp();
        TrustParams::new(
            theta[..n].iter().map(exp).collect(),
            theta[n..].iter().map(exp).collect(),
        )
    }

    fn predict(&self, record: &PreparedRecord, params: &TrustParams) -> f64 {
        trust_integral(&record.belief, &record.target, params, self.bins_per_dim)
            .expect("prepared records match the parameter dimension")
    }
}

/// Linear-Gaussian style baseline: ignores task requirements entirely.
#[derive(Debug, Clone, Copy, Default)]
pub struct OptBaseline;

impl TrustModel for OptBaseline {
    type Params = BaselineWeights;

    fn name(&self) -> &'static str {
        "OPT"
    }

    fn initial_theta(&self, _dim: usize) -> Vec<f64> {
        vec![0.0; 3]
    }

    fn decode(&self, theta: &[f64]) -> Result<BaselineWeights> {
        Ok(BaselineWeights {
            bias: theta[0],
            success: theta[1],
            failure: theta[2],
        })
    }

    fn predict(&self, record: &PreparedRecord, params: &BaselineWeights) -> f64 {
        params.predict(&record.outcomes)
    }
}
