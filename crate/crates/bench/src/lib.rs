//! Fixed inputs for the benchmarks in `benches/`.

use captrust_core::fitting::TrialRecord;
use captrust_core::{
    generate_synthetic_dataset, simulate_outcomes, AgentId, CapabilityVector, EmpiricalTrustGrid, SimConfig,
    SyntheticAgent, SyntheticConfig, TrustParams, UniformBelief,
};

pub fn belief(n: usize) -> UniformBelief {
    UniformBelief::from_bounds(&vec![(0.2, 0.8); n]).unwrap()
}

pub fn task(n: usize) -> CapabilityVector {
    CapabilityVector::new(vec![0.5; n]).unwrap()
}

/// Grid after `observations` simulated outcomes of the agent at `(0.7, 0.4, ...)`.
pub fn identification_grid(dim: usize, observations: usize) -> EmpiricalTrustGrid {
    let truth: Vec<f64> = [0.7, 0.4, 0.55].iter().copied().cycle().take(dim).collect();
    let agent = SyntheticAgent::with_defaults(AgentId::human("bench"), CapabilityVector::new(truth).unwrap()).unwrap();
    let config = SimConfig {
        dim,
        task_count: observations,
        snapshots: vec![observations],
        seed: 1,
        ..SimConfig::default()
    };
    let mut grid = EmpiricalTrustGrid::new(dim, config.bins_per_dim).unwrap();
    for record in simulate_outcomes(&agent, &config).unwrap() {
        grid.add(&record).unwrap();
    }
    grid
}

pub fn records(count: usize) -> Vec<TrialRecord> {
    let params = TrustParams::new(vec![8.0, 12.0], vec![1.0, 1.5]).unwrap();
    let config = SyntheticConfig {
        record_count: count,
        seed: 1,
        ..SyntheticConfig::default()
    };
    generate_synthetic_dataset(&params, &config).unwrap().records
}
