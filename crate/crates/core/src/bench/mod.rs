//! Experiment harness: scenario runs, sweeps, comparisons and oracle checks.

mod config;
mod harness;
mod output;
mod run;

pub use config::{load_scenarios, BackendKind, BackendSource, RunConfig, OUT_DIR_ENV};
pub use harness::{
    compare_paths, compare_scores, comparison_csv, execute, oracle_case, oracle_check, oracle_prompt,
    run_summary_csv, sweep, sweep_csv, write_outputs, Aggregate, Comparison, OracleCase, RunReport, SweepAxis,
    SweepRow,
};
pub use output::{jf_series, line_chart, parse_scores_csv, write_atomic};
pub use run::{run_scenario, GreedyOptions, Mode, ScenarioRun, TrackSettings};

/// `git describe` of the source tree at build time, or `unknown`.
pub const BUILD_VERSION: &str = env!("TREEMEM_GIT_DESCRIBE");

/// Harness failure, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Bad configuration or arguments (exit code 2).
    #[error("{0}")]
    Config(String),
    /// Failure while running (exit code 1).
    #[error("{0}")]
    Run(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Run(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Run(_) => "run",
        }
    }
}
