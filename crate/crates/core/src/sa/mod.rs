//! Online (stochastic approximation) solvers.

mod batched;
mod restart;
mod schedule;
mod sgd;

pub use batched::{
    accelerated_descent, batched_accelerated_run, batched_accelerated_run_with, batched_plan, make_minibatch_oracle,
    BiasedSmoothOracle,
};
pub use restart::{restart_plan, restarted_run, restarted_run_with, run_plan, RestartPlan, Stage};
pub use schedule::{step_size, ScheduleKind, StepSchedule};
pub use sgd::{average_iterates, sgd_run, sgd_run_with, Averager, RunTrace, SgdOptions, Window, MAX_CHECKPOINTS};

use crate::error::{Error, Result};

/// Accuracy target `(ε, β)` plus an inner accuracy `δ` for offline solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetAccuracy {
    pub epsilon: f64,
    pub beta: f64,
    pub delta: f64,
}

impl TargetAccuracy {
    pub fn new(epsilon: f64, beta: f64) -> Result<Self> {
        Self::with_delta(epsilon, beta, 0.0)
    }

    pub fn with_delta(epsilon: f64, beta: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::input(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::input(format!("beta must lie in (0, 1), got {beta}")));
        }
        if !(delta >= 0.0) {
            return Err(Error::input(format!("delta must be nonnegative, got {delta}")));
        }
        Ok(TargetAccuracy { epsilon, beta, delta })
    }
}
