//! Monte Carlo experiments: configuration, trial engine, result tables and
//! diagnostics.

pub mod config;
pub mod diagnostics;
pub mod engine;
pub mod report;

pub use config::{default_schedule, schedule_every, ExperimentConfig, InstanceSpec};
pub use diagnostics::{
    conditional_second_moment, empirical_exponent, gaussian_tail_bracket, normal_cdf,
    runner_up, xi_sequence, Comparison, EmpiricalExponent, TailBracket,
};
pub use engine::{run_trial, Engine, Trace, TraceView, TrialOutcome, THREADS_ENV};
pub use report::{DiagnosticsReport, DiagnosticsRow, ResultRow, ResultTable, RESULTS_HEADER};
