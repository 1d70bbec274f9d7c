//! Built-in invariant suite behind `sastra verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{project, FeasibleSet};
use crate::harness::{find_sample_complexity, fit_rate, Experiment, TrialOutcome};
use crate::linalg::dist2;
use crate::problems::{ProblemInstance, Sample, SampleStream};
use crate::sa::{sgd_run, StepSchedule, TargetAccuracy};
use crate::saa::{
    build_empirical, empirical_value_grad, norm_power_erm_closed_form, solve_erm, vr_gradient, Composite, VrState,
};
use crate::sliding::{accelerated_reference, sliding_run, split_quadratic_instance, SlidingParams};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, r: Result<(bool, String)>) -> CheckResult {
    match r {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs every check; each takes well under a second.
pub fn run_verify_suite() -> Vec<CheckResult> {
    vec![
        check("projection properties", projections(2000)),
        check("sample mean identity", sample_mean_identity()),
        check("vr unbiasedness", vr_unbiased()),
        check("sliding degenerate identity", sliding_identity()),
        check("saa closed form", closed_form()),
        check("rate fit", rate_fit()),
        check("complexity search", complexity_search()),
    ]
}

/// Non-expansiveness, idempotence and simplex normalization on random inputs.
pub fn projections(cases: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut failures = 0;
    for i in 0..cases {
        let n = rng.random_range(1..8);
        let set = match i % 4 {
            0 => FeasibleSet::l2_ball_origin(n, rng.random_range(0.1..3.0))?,
            1 => FeasibleSet::l1_ball_origin(n, rng.random_range(0.1..3.0))?,
            2 => FeasibleSet::simplex(n)?,
            _ => FeasibleSet::unconstrained(n)?,
        };
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (px, py) = (project(&set, &x)?, project(&set, &y)?);
        let expansive = dist2(&px, &py) > dist2(&x, &y) * (1.0 + 1e-12) + 1e-12;
        let ppx = project(&set, &px)?;
        let not_idempotent = dist2(&ppx, &px) > 1e-12;
        let bad_simplex = matches!(set, FeasibleSet::Simplex { .. })
            && ((px.iter().sum::<f64>() - 1.0).abs() > 1e-12 || px.iter().any(|v| *v < 0.0));
        if expansive || not_idempotent || bad_simplex {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{cases} cases, {failures} failures")))
}

fn sample_mean_identity() -> Result<(bool, String)> {
    let p = ProblemInstance::gaussian_mean(vec![0.3], 1.0, None, FeasibleSet::unconstrained(1)?)?;
    let n = 10_000;
    let stream = SampleStream::new(5);
    let trace = sgd_run(&p, StepSchedule::inverse_strong(2.0)?, n, stream, &[0.0])?;
    let mut s = stream;
    let mut total = 0.0;
    for _ in 0..n {
        if let Sample::Point(v) = p.sample(&mut s) {
            total += v[0];
        }
    }
    let err = (trace.last[0] - total / n as f64).abs();
    Ok((err <= 1e-12, format!("|x - mean| = {err:e}")))
}

fn vr_unbiased() -> Result<(bool, String)> {
    let p = ProblemInstance::random_finite_sum(20, 5, 10.0, 3, false)?;
    let e = build_empirical(&p, 20, SampleStream::new(1), Composite::None)?;
    let st = VrState::new(&e, &[0.5; 5], 20, 0.1)?;
    let x = [0.1, -0.2, 0.3, -0.4, 0.5];
    let mut mean = vec![0.0; 5];
    for t in 0..20 {
        for (m, g) in mean.iter_mut().zip(vr_gradient(&st, &e, &x, t)?) {
            *m += g / 20.0;
        }
    }
    let err = dist2(&mean, &empirical_value_grad(&e, &x)?.1);
    Ok((err <= 1e-12, format!("deviation {err:e}")))
}

fn sliding_identity() -> Result<(bool, String)> {
    let (mut g, _) = split_quadratic_instance(10, 1.0, 100.0, 0.01, 1)?;
    let params = SlidingParams::new(1.0, 0.0, 0.01)?.recording();
    let x0 = vec![1.0; 10];
    let out = sliding_run(&mut g, None, &params, &x0, 1e-10, 100_000)?;
    let reference = accelerated_reference(&mut g, &params, &x0, 1e-10, 100_000);
    Ok((out.iterates == reference, format!("{} iterates compared", reference.len())))
}

fn closed_form() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (i, s) in [1.0, 1.5, 2.0, 3.0].into_iter().enumerate() {
        let p = ProblemInstance::norm_power(3, s, 0.5)?;
        let e = build_empirical(&p, 30, SampleStream::new(i as u64), Composite::None)?;
        let sol = solve_erm(&e, 1e-14, 1_000_000)?;
        let xh = norm_power_erm_closed_form(&e)?;
        worst = worst.max(dist2(&sol.point, &xh));
    }
    Ok((worst <= 1e-6, format!("max distance {worst:e}")))
}

fn rate_fit() -> Result<(bool, String)> {
    let f = fit_rate(&[(100.0, 0.1), (10_000.0, 0.01)])?;
    Ok(((f.slope + 0.5).abs() < 1e-12, format!("slope {}", f.slope)))
}

struct InverseSqrt;

impl Experiment for InverseSqrt {
    fn solver_id(&self) -> String {
        "inverse_sqrt".into()
    }
    fn problem_id(&self) -> String {
        "synthetic".into()
    }
    fn trial(&self, n: Option<u64>, _: &TargetAccuracy, _: u64) -> Result<TrialOutcome> {
        let n = n.unwrap_or(1);
        Ok(TrialOutcome {
            samples: n,
            gap: 10.0 / (n as f64).sqrt(),
        })
    }
}

fn complexity_search() -> Result<(bool, String)> {
    let r = find_sample_complexity(&InverseSqrt, &TargetAccuracy::new(0.1, 0.1)?, 1, 1 << 20, 0)?;
    let ok = !r.saturated && r.n >= 10_000 && r.n <= 11_000;
    Ok((ok, format!("N* = {}", r.n)))
}
