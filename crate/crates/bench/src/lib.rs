//! Timing harness for comparing the approaches: per-seed build and solve
//! times, median speedups against a reference approach, and two-sample
//! t-tests on the solve times.

pub mod config;
pub mod harness;
pub mod report;
pub mod stats;

use flowgraph_core::Approach;
use thiserror::Error;

pub use config::{BenchConfig, InstanceSel, SolverChoice};
pub use harness::{run_benchmark, BenchReport, Speedup, TTestRow, TimingSample};
pub use report::write_report;
pub use stats::{median_speedup, two_sample_t_test, StatsError, TTestResult};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{approach} reached objective {objective:e} on instance {instance} seed {seed}, reference has {reference:e}")]
    ObjectiveMismatch { approach: Approach, instance: String, seed: u64, objective: f64, reference: f64 },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("building {0} failed: {1}")]
    Build(Approach, String),
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
