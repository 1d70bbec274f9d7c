//! Repeated trials, success probabilities, sample-complexity search, rate fits and CSV reports.

mod report;
mod experiment;
mod trials;

pub use report::{
    curve_csv, read_curve, read_trials, summary_line, trials_csv, write_curve, write_trials, CURVE_HEADER, TRIAL_HEADER,
};
pub use experiment::{Algorithm, FamilyConfig, ProblemConfig, ScheduleChoice, SetConfig, SolverConfig, SolverExperiment};
pub use trials::{
    find_sample_complexity, fit_rate, in_pool, median, median_gap_curve, run_trials, sample_complexity_curve,
    success_probability, wilson_interval, ComplexityResult, CurvePoint, Experiment, Probe, RateFit,
    SampleComplexityCurve, SuccessEstimate, TrialOptions, TrialOutcome, TrialResult, DEFAULT_PROBE_TRIALS,
    RESOLUTION,
};
