//! Monte-Carlo benchmarks and the `splitgt` command line for the
//! `splitgt-core` group testing schemes.

pub mod bench;
pub mod cli;
pub mod error;
pub mod eta;
pub mod output;

pub use bench::{run_trials, run_trials_timed, sweep, AggregateResult, Algorithm, Overrides, TrialConfig};
pub use error::BenchError;
