//! Synthetic trustees for capability identification and task allocation.
//!
//! A [`SyntheticAgent`] has fixed hidden capabilities. It succeeds with
//! probability `p_high` on tasks whose requirements are all within its
//! capabilities and with `p_low` otherwise. [`run_identification`] plays a
//! robotic trustor that logs outcomes on random tasks, bins them and refits
//! the belief bounds at scheduled observation counts.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::artificial::{fit_capability_bounds, EmpiricalTrustGrid, FitResult, DEFAULT_RESOLUTION};
use crate::belief::{BeliefRecorder, UniformBelief};
use crate::capability::{AgentId, CapabilityVector, Outcome, OutcomeRecord, Role, TaskSpec};
use crate::error::{Result, TrustError};
use crate::rng;
use crate::trust::DEFAULT_BINS_PER_DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAgent {
    pub id: AgentId,
    pub true_capabilities: CapabilityVector,
    pub p_high: f64,
    pub p_low: f64,
}

impl SyntheticAgent {
    pub const DEFAULT_P_HIGH: f64 = 0.95;
    pub const DEFAULT_P_LOW: f64 = 0.05;

    pub fn new(id: AgentId, true_capabilities: CapabilityVector, p_high: f64, p_low: f64) -> Result<Self> {
        if !(0.0 <= p_low && p_low < p_high && p_high <= 1.0) {
            return Err(TrustError::InvalidArgument(format!(
                "need 0 <= p_low < p_high <= 1, got p_low={p_low}, p_high={p_high}"
            )));
        }
        Ok(Self {
            id,
            true_capabilities,
            p_high,
            p_low,
        })
    }

    /// Agent with the default success probabilities.
    pub fn with_defaults(id: AgentId, true_capabilities: CapabilityVector) -> Result<Self> {
        Self::new(id, true_capabilities, Self::DEFAULT_P_HIGH, Self::DEFAULT_P_LOW)
    }

    pub fn meets(&self, task: &TaskSpec) -> bool {
        task.requirements
            .values()
            .iter()
            .zip(self.true_capabilities.values())
            .all(|(req, cap)| req <= cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dim: usize,
    pub task_count: usize,
    pub bins_per_dim: usize,
    pub resolution: f64,
    pub seed: u64,
    /// Observation counts at which to refit and emit a snapshot.
    pub snapshots: Vec<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            task_count: 1000,
            bins_per_dim: DEFAULT_BINS_PER_DIM,
            resolution: DEFAULT_RESOLUTION,
            seed: 0,
            snapshots: vec![0, 50, 200, 1000],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(TrustError::ZeroDimensions);
        }
        if self.bins_per_dim == 0 {
            return Err(TrustError::InvalidArgument("bins_per_dim must be >= 1".into()));
        }
        crate::artificial::lattice_steps(self.resolution)?;
        if let Some(&bad) = self.snapshots.iter().find(|&&s| s > self.task_count) {
            return Err(TrustError::InvalidArgument(format!(
                "snapshot {bad} exceeds task count {}",
                self.task_count
            )));
        }
        Ok(())
    }
}

/// `task_count` tasks with requirements uniform on `[0, 1]^dim`, drawn
/// from stream 0 of the seed.
pub fn generate_tasks(config: &SimConfig) -> Result<Vec<TaskSpec>> {
    let mut rng = rng::stream(config.seed, 0);
    (0..config.task_count)
        .map(|j| {
            let req: Vec<f64> = (0..config.dim).map(|_| rng.random::<f64>()).collect();
            Ok(TaskSpec::new(format!("g{}", j + 1), CapabilityVector::new(req)?))
        })
        .collect()
}

pub fn sample_outcome<R: Rng + ?Sized>(
    agent: &SyntheticAgent,
    task: &TaskSpec,
    time: u64,
    rng: &mut R,
) -> Result<OutcomeRecord> {
    task.requirements.check_dim(agent.true_capabilities.dim())?;
    let p = if agent.meets(task) { agent.p_high } else { agent.p_low };
    let success = rng.random::<f64>() < p;
    Ok(OutcomeRecord::new(task.clone(), time, Outcome::from_success(success)))
}

/// Tasks and their sampled outcomes; outcomes use stream 1 of the seed.
pub fn simulate_outcomes(agent: &SyntheticAgent, config: &SimConfig) -> Result<Vec<OutcomeRecord>> {
    config.validate()?;
    agent.true_capabilities.check_dim(config.dim)?;
    let mut rng = rng::stream(config.seed, 1);
    generate_tasks(config)?
        .into_iter()
        .enumerate()
        .map(|(j, task)| sample_outcome(agent, &task, j as u64 + 1, &mut rng))
        .collect()
}

/// State of the identification after a number of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub observations: usize,
    pub fit: FitResult,
    pub grid: EmpiricalTrustGrid,
    /// Artificial trust of the fitted belief at every bin center, row-major.
    pub surface: Vec<f64>,
}

impl Snapshot {
    /// `center_0,...,center_{n-1},trust` rows.
    pub fn surface_table(&self) -> String {
        let n = self.grid.dim();
        let mut out: String = (0..n).map(|i| format!("center_{i},")).collect();
        out.push_str("trust\n");
        for (flat, t) in self.surface.iter().enumerate() {
            for c in self.grid.centers_of(&self.grid.unflatten(flat)) {
                let _ = write!(out, "{c},");
            }
            let _ = writeln!(out, "{t}");
        }
        out
    }
}

/// Identifies `agent`'s capabilities from outcome logs.
///
/// For every scheduled count `N` (in ascending order) the first `N`
/// outcomes are binned and the belief bounds refitted. With no observations
/// the uninformed belief `(0, 1)` per dimension is reported.
pub fn run_identification(agent: &SyntheticAgent, config: &SimConfig) -> Result<Vec<Snapshot>> {
    let outcomes = simulate_outcomes(agent, config)?;
    let mut schedule = config.snapshots.clone();
    schedule.sort_unstable();
    schedule.dedup();

    let mut grid = EmpiricalTrustGrid::new(config.dim, config.bins_per_dim)?;
    let mut consumed = 0;
    let mut snapshots = Vec::with_capacity(schedule.len());
    for n_obs in schedule {
        for record in &outcomes[consumed..n_obs] {
            grid.add(record)?;
        }
        consumed = n_obs;
        let fit = if grid.total_observations() == 0 {
            FitResult {
                belief: UniformBelief::init(config.dim)?,
                objective: 0.0,
                evaluations: 0,
            }
        } else {
            fit_capability_bounds(&grid, config.resolution)?
        };
        let surface = grid.trust_surface(&fit.belief)?;
        snapshots.push(Snapshot {
            observations: n_obs,
            fit,
            grid: grid.clone(),
            surface,
        });
    }
    Ok(snapshots)
}

/// Runs the interval update rule over the same outcome stream that
/// [`run_identification`] uses, for side-by-side comparison.
pub fn run_belief_updates(agent: &SyntheticAgent, config: &SimConfig) -> Result<BeliefRecorder> {
    let mut recorder = BeliefRecorder::new(UniformBelief::init(config.dim)?);
    for record in simulate_outcomes(agent, config)? {
        recorder.observe(&record)?;
    }
    Ok(recorder)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    #[default]
    PreferRobot,
    PreferHuman,
}

/// Picks the agent with strictly higher trust; exact ties go by `tie`.
pub fn allocate_task<'a>(
    human: &'a AgentId,
    trust_in_human: f64,
    robot: &'a AgentId,
    trust_in_robot: f64,
    tie: TieRule,
) -> Result<&'a AgentId> {
    for t in [trust_in_human, trust_in_robot] {
        if !(0.0..=1.0).contains(&t) {
            return Err(TrustError::InvalidProbability(t));
        }
    }
    if human.role != Role::Human || robot.role != Role::Robot {
        return Err(TrustError::InvalidArgument(
            "expected one human and one robot agent".into(),
        ));
    }
    Ok(if trust_in_human > trust_in_robot {
        human
    } else if trust_in_robot > trust_in_human {
        robot
    } else {
        match tie {
            TieRule::PreferRobot => robot,
            TieRule::PreferHuman => human,
        }
    })
}
