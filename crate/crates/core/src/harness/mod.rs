//! Desk-scale reproduction of the targeting experiment: target field, trial
//! plans, simulated participants, metrics and result files.

pub mod agent;
pub mod experiment;
pub mod field;
pub mod metrics;

pub use agent::{
    simulate_trial, simulate_trial_with, AgentKind, AgentSpec, SimulationOptions, TrackingNoise,
    TrialRecord, TrialStatus,
};
pub use experiment::{run_experiment, ExperimentResults, ExperimentSpec};
pub use field::{generate_field, sample_trial_plan, Condition, PlannedTrial, Target, TargetField};
pub use metrics::{aggregate, GroupBy, GroupStats, Metric};
pub use crate::controller::end_point_deviation;
