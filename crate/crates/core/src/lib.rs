//! Fixed-budget best-arm identification.
//!
//! * [`models`]: arm distributions, bandit instances, named scenarios and
//!   random case recipes.
//! * [`allocation`]: the optimal sampling proportions and their exponent.
//! * [`estimators`]: clipped plug-in estimates and AIPW/DR/IPW pseudo-rewards.
//! * [`strategies`]: RS strategies and the uniform, alpha-elimination,
//!   sequential-halving and UGapEb baselines.
//! * [`harness`]: parallel, seeded Monte Carlo experiments and diagnostics.
//!
//! Arms are 0-based throughout the API.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod error;
pub mod estimators;
pub mod format;
pub mod harness;
pub mod models;
pub mod rng;
pub mod strategies;

pub use allocation::{
    brute_force_exponent, exponent_of, solve_instance, solve_optimal_allocation, Allocation,
    AllocationSolution,
};
pub use error::{Error, Result};
pub use harness::{
    DiagnosticsReport, Engine, ExperimentConfig, InstanceSpec, ResultTable,
};
pub use models::{
    complexity_measures, generate_case, ArmDistribution, BanditInstance, Case, Complexity,
    Scenario,
};
pub use rng::RandomStream;
pub use strategies::{Estimator, Strategy, StrategyKind, StrategyParams, StrategySpec};
