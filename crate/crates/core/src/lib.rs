//! Capabilities-based bi-directional trust model.
//!
//! Trust is the probability that a trustee succeeds at a task, obtained by
//! integrating a capability-vs-requirement success kernel against the
//! trustor's belief over the trustee's capabilities. The crate provides
//!
//! * [`trust`]: the sigmoid success kernel and its belief integral,
//! * [`belief`]: the uniform interval belief and its outcome-driven update,
//! * [`artificial`]: closed-form robotic trust and bound identification
//!   from logged outcomes,
//! * [`fitting`]: parameter fitting against trust ratings with k-fold
//!   cross-validation and a task-agnostic baseline,
//! * [`sim`]: synthetic agents for capability identification and task
//!   allocation,
//! * [`data`]: the dataset file format, validation and a synthetic generator.

pub mod artificial;
pub mod belief;
pub mod capability;
pub mod data;
pub mod error;
pub mod fitting;
pub mod rng;
pub mod sim;
pub mod trust;

pub use artificial::{artificial_trust, fit_capability_bounds, psi, EmpiricalTrustGrid, FitResult};
pub use belief::{BeliefRecorder, IntervalChange, UniformBelief};
pub use capability::{AgentId, CapabilityVector, Outcome, OutcomeRecord, Role, TaskSpec, TrustParams};
pub use data::{generate_synthetic_dataset, load_dataset, DatasetFile, RatingNoise, SyntheticConfig};
pub use error::{Result, TrustError};
pub use fitting::{
    cross_entropy_loss, cross_validate, evaluate_models, fit_params, predict_trust, FitConfig, FitReport,
    ModelComparison, TrialRecord,
};
pub use sim::{
    allocate_task, run_belief_updates, run_identification, simulate_outcomes, SimConfig, Snapshot, SyntheticAgent,
    TieRule,
};
pub use trust::{trust_given_capability, trust_integral};
