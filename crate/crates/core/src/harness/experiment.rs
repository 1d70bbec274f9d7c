//! Buildable problem and solver descriptions, as read from experiment configs.

use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, NormTag};
use crate::linalg::dist2;
use crate::problems::{population_gap, ProblemInstance, SampleStream, SOFT_SVM_POOL};
use crate::sa::{
    accelerated_descent, batched_accelerated_run_with, batched_plan, make_minibatch_oracle, restart_plan, run_plan,
    sgd_run_with, ScheduleKind, SgdOptions, StepSchedule, TargetAccuracy, Window,
};
use crate::saa::{
    build_empirical, regularized_pipeline_with, solve_erm, strong_delta, vr_solve, Composite,
};

use super::trials::{Experiment, TrialOutcome};

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyConfig {
    /// Every coordinate of the mean equals `mean`.
    GaussianMean { mean: f64, sigma: f64, truncation: Option<f64> },
    /// Every coordinate of the true parameter equals `truth`.
    Ridge { truth: f64, design_radius: f64, noise: f64 },
    Lasso { truth: f64, design_radius: f64, noise: f64, lambda: f64 },
    SoftSvm { theta: f64, pool: usize },
    NormPower { s: f64, sigma: f64 },
    FiniteSum { terms: usize, kappa: f64, interpolating: bool },
}

impl FamilyConfig {
    pub fn id(&self) -> &'static str {
        match self {
            FamilyConfig::GaussianMean { .. } => "gaussian_mean",
            FamilyConfig::Ridge { .. } => "ridge",
            FamilyConfig::Lasso { .. } => "lasso",
            FamilyConfig::SoftSvm { .. } => "soft_svm",
            FamilyConfig::NormPower { .. } => "norm_power",
            FamilyConfig::FiniteSum { .. } => "finite_sum",
        }
    }

    pub const IDS: [&'static str; 6] = ["gaussian_mean", "ridge", "lasso", "soft_svm", "norm_power", "finite_sum"];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetConfig {
    Unconstrained,
    L2Ball { radius: f64 },
    L1Ball { radius: f64 },
    Simplex,
}

impl SetConfig {
    pub fn build(&self, dim: usize) -> Result<FeasibleSet> {
        match *self {
            SetConfig::Unconstrained => FeasibleSet::unconstrained(dim),
            SetConfig::L2Ball { radius } => FeasibleSet::l2_ball_origin(dim, radius),
            SetConfig::L1Ball { radius } => FeasibleSet::l1_ball_origin(dim, radius),
            SetConfig::Simplex => FeasibleSet::simplex(dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub family: FamilyConfig,
    pub dim: usize,
    pub set: SetConfig,
    /// Seeds instance generation (SoftSVM pool, finite-sum terms), not trials.
    pub seed: u64,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<ProblemInstance> {
        let n = self.dim;
        let set = || self.set.build(n);
        match self.family {
            FamilyConfig::GaussianMean { mean, sigma, truncation } => {
                ProblemInstance::gaussian_mean(vec![mean; n], sigma, truncation, set()?)
            }
            FamilyConfig::Ridge { truth, design_radius, noise } => {
                ProblemInstance::ridge(vec![truth; n], design_radius, noise, set()?)
            }
            FamilyConfig::Lasso { truth, design_radius, noise, lambda } => {
                ProblemInstance::lasso(vec![truth; n], design_radius, noise, lambda, set()?)
            }
            FamilyConfig::SoftSvm { theta, pool } => ProblemInstance::soft_svm(n, theta, pool, self.seed, set()?),
            FamilyConfig::NormPower { s, sigma } => {
                if self.set != (SetConfig::L2Ball { radius: 1.0 }) {
                    return Err(Error::input("norm_power is defined on the unit l2 ball; set it to l2_ball with radius 1"));
                }
                ProblemInstance::norm_power(n, s, sigma)
            }
            FamilyConfig::FiniteSum { terms, kappa, interpolating } => {
                if self.set != SetConfig::Unconstrained {
                    return Err(Error::input("finite_sum is unconstrained"));
                }
                ProblemInstance::random_finite_sum(terms, n, kappa, self.seed, interpolating)
            }
        }
    }

    pub fn default_pool() -> usize {
        SOFT_SVM_POOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Sgd,
    Restart,
    Batched,
    Erm,
    Pipeline,
    Vr,
}

impl Algorithm {
    pub const IDS: [&'static str; 6] = ["sgd", "restart", "batched", "erm", "pipeline", "vr"];

    pub fn id(self) -> &'static str {
        Self::IDS[self as usize]
    }

    pub fn from_id(s: &str) -> Option<Self> {
        use Algorithm::*;
        [Sgd, Restart, Batched, Erm, Pipeline, Vr].into_iter().find(|a| a.id() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleChoice {
    ConstantHorizon,
    InverseStrong,
    Decreasing,
    AdaGrad,
}

impl ScheduleChoice {
    pub const IDS: [&'static str; 4] = ["constant", "inverse", "decreasing", "adagrad"];

    pub fn id(self) -> &'static str {
        Self::IDS[self as usize]
    }

    pub fn from_id(s: &str) -> Option<Self> {
        use ScheduleChoice::*;
        [ConstantHorizon, InverseStrong, Decreasing, AdaGrad].into_iter().find(|a| a.id() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub schedule: ScheduleChoice,
    /// Scales step sizes (SGD) or sample prescriptions (restart, batched, pipeline).
    pub multiplier: f64,
    pub window: Option<Window>,
    /// Starting point; the centre of the set when absent.
    pub start: Option<Vec<f64>>,
    /// Bound on `‖x0 − x*‖₂`; derived from the set when absent.
    pub radius: Option<f64>,
    /// Inner ERM accuracy; derived from the target when absent.
    pub delta: Option<f64>,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            schedule: ScheduleChoice::ConstantHorizon,
            multiplier: 1.0,
            window: None,
            start: None,
            radius: None,
            delta: None,
        }
    }
}

/// A solver bound to a built problem instance.
pub struct SolverExperiment {
    pub problem: ProblemInstance,
    pub solver: SolverConfig,
    x0: Vec<f64>,
    radius: f64,
}

impl SolverExperiment {
    pub fn new(problem: ProblemInstance, solver: SolverConfig) -> Result<Self> {
        let x0 = match &solver.start {
            Some(v) => {
                crate::error::check_dim(problem.dimension(), v.len())?;
                v.clone()
            }
            None => problem.feasible_set().center_point(),
        };
        let radius = match (solver.radius, problem.feasible_set()) {
            (Some(r), _) => r,
            // Synthetic instances know their optimum.
            (None, FeasibleSet::Unconstrained { .. }) => dist2(&x0, problem.optimum()).max(1.0),
            (None, set @ FeasibleSet::Simplex { .. }) => crate::geometry::set_diameter(set, NormTag::L2)?,
            (None, set) => set.max_norm2() + crate::linalg::norm2(&x0),
        };
        if !(radius > 0.0) {
            return Err(Error::input("solver radius must be positive"));
        }
        Ok(SolverExperiment { problem, solver, x0, radius })
    }

    pub fn start(&self) -> &[f64] {
        &self.x0
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn schedule(&self, n: u64) -> Result<StepSchedule> {
        let c = self.problem.constants();
        let k = self.solver.multiplier;
        let kind = match self.solver.schedule {
            ScheduleChoice::ConstantHorizon => ScheduleKind::ConstantHorizon { r: k * self.radius, m: c.m_p, n },
            ScheduleChoice::InverseStrong => ScheduleKind::InverseStrong { mu: c.mu_p / k },
            ScheduleChoice::Decreasing => ScheduleKind::Decreasing { r: k * self.radius, m: c.m_p },
            ScheduleChoice::AdaGrad => ScheduleKind::AdaGrad {
                r: k * self.radius,
                gamma_max: k * self.radius,
            },
        };
        StepSchedule::new(kind)
    }

    fn erm_delta(&self, target: &TargetAccuracy) -> f64 {
        if let Some(d) = self.solver.delta {
            return d;
        }
        strong_delta(target, &self.problem.constants()).unwrap_or(0.1 * target.epsilon)
    }

    fn require(n: Option<u64>, what: &str) -> Result<u64> {
        n.ok_or_else(|| Error::input(format!("{what} needs an explicit sample count")))
    }

    /// Runs one trial and returns `(point, samples consumed)`.
    pub fn solve(&self, n: Option<u64>, target: &TargetAccuracy, stream: SampleStream) -> Result<(Vec<f64>, u64)> {
        let p = &self.problem;
        let s = &self.solver;
        match s.algorithm {
            Algorithm::Sgd => {
                let n = Self::require(n, "sgd")?;
                let opts = SgdOptions {
                    window: s.window,
                    record_gaps: false,
                };
                let t = sgd_run_with(p, self.schedule(n)?, n, stream, &self.x0, opts)?;
                Ok((t.average, t.stream.counter - stream.counter))
            }
            Algorithm::Restart => {
                let c = p.constants();
                let mut plan = restart_plan(c.s, c.mu_ps, c.m_p, target, self.radius, s.multiplier)?;
                if let Some(n) = n {
                    // Rescale the stages proportionally to spend about `n` samples.
                    let total = plan.total_samples() as f64;
                    for st in &mut plan.stages {
                        st.samples = ((st.samples as f64 * n as f64 / total).round() as u64).max(1);
                    }
                }
                let t = run_plan(p, &plan, c.m_p, stream, &self.x0)?;
                Ok((t.average, t.stream.counter - stream.counter))
            }
            Algorithm::Batched => {
                if let Some(n) = n {
                    return self.batched_with_budget(n, target, stream);
                }
                let t = batched_accelerated_run_with(p, target, self.radius, s.multiplier, stream, &self.x0)?;
                Ok((t.last, t.oracle_calls))
            }
            Algorithm::Erm => {
                let n = Self::require(n, "erm")?;
                let e = build_empirical(p, n as usize, stream, Composite::None)?;
                let sol = solve_erm(&e, self.erm_delta(target), 1_000_000)?;
                Ok((sol.point, n))
            }
            Algorithm::Pipeline => {
                let out = regularized_pipeline_with(p, target, n, stream, &self.x0, None, s.multiplier)?;
                Ok((out.point, out.samples))
            }
            Algorithm::Vr => {
                let n = Self::require(n, "vr")?;
                let e = build_empirical(p, n as usize, stream, Composite::None)?;
                let out = vr_solve(&e, self.erm_delta(target), 10_000, stream.advanced(n))?;
                Ok((out.point, n))
            }
        }
    }

    /// Batched run whose plan is rescaled so that `iterations × batch ≈ n`.
    /// Returns the last iterate and the samples consumed.
    fn batched_with_budget(&self, n: u64, target: &TargetAccuracy, stream: SampleStream) -> Result<(Vec<f64>, u64)> {
        let c = self.problem.constants();
        let (k, r) = batched_plan(c.l, self.radius, c.sigma_star_sq, target.epsilon, self.solver.multiplier);
        let scale = (n as f64 / (k * r) as f64).sqrt();
        let k2 = ((k as f64 * scale).round() as u64).clamp(1, n.max(1));
        let r2 = (n / k2).max(1);
        let oracle = make_minibatch_oracle(&self.problem, r2)?;
        let mut stream = stream;
        let mut xs = accelerated_descent(self.problem.feasible_set(), c.l, k2, &self.x0, |y| oracle.query(y, &mut stream))?;
        Ok((xs.swap_remove(k2 as usize), k2 * r2))
    }
}

impl Experiment for SolverExperiment {
    fn solver_id(&self) -> String {
        self.solver.algorithm.id().to_string()
    }

    fn problem_id(&self) -> String {
        self.problem.name().to_string()
    }

    fn trial(&self, n: Option<u64>, target: &TargetAccuracy, seed: u64) -> Result<TrialOutcome> {
        let (x, samples) = self.solve(n, target, SampleStream::new(seed))?;
        Ok(TrialOutcome {
            samples,
            gap: population_gap(&self.problem, &x)?,
        })
    }
}
