//! Config-driven entry point: `sastra <run|complexity|curve|verify> --config <path>`.

mod config;
mod dispatch;
mod verify;

pub use config::{parse_config, print_config, ExperimentBlock, ExperimentConfig, Mode};
pub use dispatch::{dispatch, DispatchOptions, DispatchOutcome};
pub use verify::{projections, run_verify_suite, CheckResult};
