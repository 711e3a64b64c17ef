//! Monte Carlo harness: configuration, trial loop, output files and CLI.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;

pub use cli::{cli_main, Cli};
pub use config::ExperimentConfig;
pub use experiment::{
    run_experiment, run_method, run_trial, run_trial_detailed, simulate_trial, CcdfTable,
    ExperimentOutput, MethodOutcome, TrialData,
};
pub use output::write_outputs;
