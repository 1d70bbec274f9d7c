use std::io::Write;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::harness::{
    curve_csv, find_sample_complexity, run_trials, sample_complexity_curve, success_probability, summary_line,
    trials_csv, CurvePoint, Experiment, SampleComplexityCurve, SolverExperiment, TrialOptions,
};
use crate::sa::TargetAccuracy;

use super::config::{ExperimentConfig, Mode};
use super::verify::run_verify_suite;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DispatchOptions {
    pub strict: bool,
    /// Overrides the config's output path.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchOutcome {
    /// One-line summary for the terminal.
    pub summary: String,
    /// A saturated search, failed trial, non-monotone curve or failed check.
    pub flagged: bool,
    /// CSV body that was written, or the check lines in verify mode.
    pub report: String,
    pub exit_code: i32,
}

/// Runs `mode`, which must agree with the config's own mode.
pub fn dispatch(config: &ExperimentConfig, mode: Mode, opts: &DispatchOptions) -> Result<DispatchOutcome> {
    if config.experiment.mode != mode {
        return Err(Error::input(format!(
            "subcommand {} does not match config mode {}",
            mode.id(),
            config.experiment.mode.id()
        )));
    }
    let e = &config.experiment;
    let (summary, flagged, report) = match mode {
        Mode::Verify => {
            let checks = run_verify_suite();
            let mut report = String::new();
            for c in &checks {
                report.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            let summary = format!("verify: {}/{} checks passed", checks.len() - failed, checks.len());
            (summary, failed > 0, report)
        }
        Mode::Run => {
            let exp = build(config).map_err(|err| err.context("building experiment"))?;
            let target = TargetAccuracy::new(e.epsilons[0], e.beta)?;
            let opts = TrialOptions {
                record_timing: e.record_timing,
            };
            let rs = run_trials(&exp, e.samples, &target, e.trials, e.seed, opts).map_err(|err| err.context("harness"))?;
            let est = success_probability(&rs, target.epsilon)?;
            let failed = rs.iter().filter(|r| r.failed()).count();
            let summary = format!(
                "run: success {}/{} at epsilon={} (95% interval [{:.3}, {:.3}]), failed trials {failed}",
                est.successes, est.trials, target.epsilon, est.lower, est.upper
            );
            (summary, failed > 0, trials_csv(&rs))
        }
        Mode::Complexity => {
            let exp = build(config).map_err(|err| err.context("building experiment"))?;
            let mut points = Vec::new();
            let mut next_seed = e.seed;
            for &eps in &e.epsilons {
                let target = TargetAccuracy::new(eps, e.beta)?;
                let r = find_sample_complexity(&exp, &target, e.trials, e.max_samples, next_seed)
                    .map_err(|err| err.context("harness"))?;
                next_seed = next_seed.wrapping_add(r.probes.len() as u64 * e.trials);
                points.push(CurvePoint {
                    epsilon: eps,
                    beta: e.beta,
                    n: r.n,
                    trials: e.trials,
                    successes: r.successes,
                    saturated: r.saturated,
                });
            }
            let curve = SampleComplexityCurve {
                points,
                fit: None,
                monotone: true,
            };
            let sat = curve.saturated();
            let ns: Vec<String> = curve.points.iter().map(|p| format!("N({})={}", p.epsilon, p.n)).collect();
            let summary = format!("complexity: {}{}", ns.join(" "), if sat { " [saturated]" } else { "" });
            (summary, sat, curve_csv(&curve))
        }
        Mode::Curve => {
            let exp = build(config).map_err(|err| err.context("building experiment"))?;
            let curve = sample_complexity_curve(&exp, &e.epsilons, e.beta, e.trials, e.max_samples, e.seed)
                .map_err(|err| err.context("harness"))?;
            let flagged = curve.saturated() || !curve.monotone;
            let summary = format!("curve: {}", summary_line(&curve).trim_start_matches("# "));
            (summary, flagged, curve_csv(&curve))
        }
    };
    match opts.out.as_ref().or(e.output.as_ref()) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                    path: dir.to_path_buf(),
                    source,
                })?;
            }
            std::fs::write(path, &report).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.as_bytes()).map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            })?;
        }
    }
    // A failed verify check fails the command even without --strict.
    let exit_code = i32::from(flagged && (opts.strict || mode == Mode::Verify));
    let summary = if flagged { format!("{summary} (flagged)") } else { summary };
    Ok(DispatchOutcome {
        summary,
        flagged,
        report,
        exit_code,
    })
}

fn build(config: &ExperimentConfig) -> Result<SolverExperiment> {
    let p = config.problem.as_ref().ok_or_else(|| Error::input("missing [problem] block"))?;
    let s = config.solver.as_ref().ok_or_else(|| Error::input("missing [solver] block"))?;
    let exp = SolverExperiment::new(p.build()?, s.clone())?;
    log::info!("experiment: {} on {}", exp.solver_id(), exp.problem_id());
    Ok(exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    fn config(mode: &str, extra: &str) -> ExperimentConfig {
        parse_config(&format!(
            "[problem]\nfamily = gaussian_mean\ndim = 1\nset = unconstrained\nmean = 0.5\nsigma = 1\n\n\
             [solver]\nalgorithm = sgd\nschedule = inverse\n\n[experiment]\nmode = {mode}\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn single_run_writes_one_record() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run.csv");
        let c = config("run", "epsilon = 0.1\nsamples = 100\ntrials = 1\n");
        let o = dispatch(&c, Mode::Run, &DispatchOptions { strict: true, out: Some(out.clone()) }).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(o.exit_code, 0);
        assert!(o.summary.starts_with("run: success"));
    }

    #[test]
    fn rate_curve_with_two_epsilons() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("curve.csv");
        let c = config("curve", "epsilon = 0.1, 0.05\ntrials = 10\nbeta = 0.3\n");
        let o = dispatch(&c, Mode::Curve, &DispatchOptions { strict: false, out: Some(out.clone()) }).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("# fit slope="));
        assert!(o.summary.contains("slope="));
    }

    #[test]
    fn verify_mode_passes() {
        let c = parse_config("[experiment]\nmode = verify\n").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let o = dispatch(&c, Mode::Verify, &DispatchOptions { strict: true, out: Some(dir.path().join("v.txt")) }).unwrap();
        assert_eq!(o.exit_code, 0, "{}", o.report);
        assert!(o.report.lines().all(|l| l.starts_with("PASS")));
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let c = config("run", "epsilon = 0.1\nsamples = 10\n");
        assert!(dispatch(&c, Mode::Curve, &DispatchOptions::default()).is_err());
    }

    #[test]
    fn strict_turns_saturation_into_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("c.csv");
        let c = config("complexity", "epsilon = 1e-9\ntrials = 3\nmax_samples = 8\n");
        let lax = dispatch(&c, Mode::Complexity, &DispatchOptions { strict: false, out: Some(out.clone()) }).unwrap();
        assert!(lax.flagged && lax.exit_code == 0);
        let strict = dispatch(&c, Mode::Complexity, &DispatchOptions { strict: true, out: Some(out) }).unwrap();
        assert_eq!(strict.exit_code, 1);
    }

    #[test]
    fn identical_configs_give_identical_reports() {
        let dir = tempfile::tempdir().unwrap();
        let c = config("run", "epsilon = 0.1\nsamples = 200\ntrials = 16\nseed = 3\n");
        let a = dispatch(&c, Mode::Run, &DispatchOptions { strict: false, out: Some(dir.path().join("a.csv")) }).unwrap();
        let b = dispatch(&c, Mode::Run, &DispatchOptions { strict: false, out: Some(dir.path().join("b.csv")) }).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(std::fs::read(dir.path().join("a.csv")).unwrap(), std::fs::read(dir.path().join("b.csv")).unwrap());
    }
}
