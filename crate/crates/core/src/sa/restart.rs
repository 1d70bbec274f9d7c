//! Restarted mirror descent under the s-growth condition.
//!
//! Stage `l` runs constant-horizon SGD with radius `R_l = R₁·2^{−(l−1)/s}`
//! (so `R_{l+1}ˢ = R₁ˢ·2^{−l}`) and sample count
//! `N_l = ⌈c·M²·ln(κ/β) / (μ²·R_l^{2(s−1)})⌉`, each stage restarting from the
//! previous stage's average. `κ` is the least integer with
//! `μ·R₁ˢ·2^{−(κ+1)} ≤ ε`; `κ = 0` degenerates to a single stage.

use crate::error::{Error, Result};
use crate::problems::{ProblemInstance, SampleStream};

use super::schedule::StepSchedule;
use super::sgd::{sgd_run, RunTrace};
use super::TargetAccuracy;

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub radius: f64,
    /// Unrounded sample count before the ceiling.
    pub base: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartPlan {
    pub kappa: u32,
    pub stages: Vec<Stage>,
}

impl RestartPlan {
    pub fn total_samples(&self) -> u64 {
        self.stages.iter().map(|s| s.samples).sum()
    }
}

/// Stage schedule for growth exponent `s`, modulus `mu_ps`, Lipschitz bound `m`.
pub fn restart_plan(s: f64, mu_ps: f64, m: f64, target: &TargetAccuracy, r1: f64, multiplier: f64) -> Result<RestartPlan> {
    if !(mu_ps > 0.0) {
        return Err(Error::NotApplicable("restarts need a positive growth modulus".into()));
    }
    if !(s >= 1.0) || !(m > 0.0 && m.is_finite()) || !(r1 > 0.0) || !(multiplier > 0.0) {
        return Err(Error::input(format!(
            "restart plan needs s >= 1, finite M > 0, R1 > 0, multiplier > 0 (s={s}, M={m}, R1={r1}, c={multiplier})"
        )));
    }
    let top = mu_ps * r1.powf(s);
    let mut kappa = 0u32;
    while top * 0.5f64.powi(kappa as i32 + 1) > target.epsilon {
        kappa += 1;
    }
    let count = kappa.max(1);
    let log_term = (count as f64 / target.beta).ln();
    let stages = (1..=count)
        .map(|l| {
            let radius = r1 * 2f64.powf(-((l - 1) as f64) / s);
            let base = multiplier * m * m * log_term / (mu_ps * mu_ps * radius.powf(2.0 * (s - 1.0)));
            Stage {
                radius,
                base,
                samples: (base.ceil() as u64).max(1),
            }
        })
        .collect();
    Ok(RestartPlan { kappa, stages })
}

/// Restarted run with the default multiplier 1.
pub fn restarted_run(
    p: &ProblemInstance,
    target: &TargetAccuracy,
    r1: f64,
    stream: SampleStream,
    x0: &[f64],
) -> Result<RunTrace> {
    restarted_run_with(p, target, r1, 1.0, stream, x0)
}

pub fn restarted_run_with(
    p: &ProblemInstance,
    target: &TargetAccuracy,
    r1: f64,
    multiplier: f64,
    stream: SampleStream,
    x0: &[f64],
) -> Result<RunTrace> {
    let c = p.constants();
    let plan = restart_plan(c.s, c.mu_ps, c.m_p, target, r1, multiplier)?;
    run_plan(p, &plan, c.m_p, stream, x0)
}

/// Executes a precomputed plan.
pub fn run_plan(p: &ProblemInstance, plan: &RestartPlan, m: f64, stream: SampleStream, x0: &[f64]) -> Result<RunTrace> {
    let mut x = x0.to_vec();
    let mut stream = stream;
    let mut calls = 0;
    let mut sizes = Vec::with_capacity(plan.stages.len());
    let mut last: Option<RunTrace> = None;
    for stage in &plan.stages {
        let sched = StepSchedule::constant_horizon(stage.radius, m, stage.samples)?;
        let trace = sgd_run(p, sched, stage.samples, stream, &x)?;
        stream = trace.stream;
        calls += trace.oracle_calls;
        sizes.push(stage.samples);
        x = trace.average.clone();
        last = Some(trace);
    }
    let mut trace = last.ok_or_else(|| Error::input("restart plan has no stages"))?;
    trace.oracle_calls = calls;
    trace.iterations = calls;
    trace.stages = sizes;
    Ok(trace)
}
