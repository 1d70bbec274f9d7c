use crate::error::{Error, Result};
use crate::geometry::{contains, mirror_step, DEFAULT_TOL};
use crate::linalg::all_finite;
use crate::problems::{population_gap, ProblemInstance, SampleStream};

use super::schedule::StepSchedule;

/// Maximum number of recorded gap checkpoints per run.
pub const MAX_CHECKPOINTS: usize = 512;

/// Which iterates enter the average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Full,
    /// Iterates with index `k > ⌊N/2⌋`.
    TailHalf,
}

/// Running sums for both averaging windows over iterates `x¹..xᴺ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Averager {
    horizon: u64,
    seen: u64,
    full: Vec<f64>,
    tail: Vec<f64>,
}

impl Averager {
    pub fn new(dim: usize, horizon: u64) -> Self {
        Averager {
            horizon,
            seen: 0,
            full: vec![0.0; dim],
            tail: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.seen += 1;
        let in_tail = self.seen > self.horizon / 2;
        for (j, v) in x.iter().enumerate() {
            self.full[j] += v;
            if in_tail {
                self.tail[j] += v;
            }
        }
    }

    pub fn mean(&self, window: Window) -> Vec<f64> {
        let (sum, count) = match window {
            Window::Full => (&self.full, self.seen),
            Window::TailHalf => (&self.tail, self.seen - (self.horizon / 2).min(self.seen)),
        };
        let c = count.max(1) as f64;
        sum.iter().map(|v| v / c).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// Iterations performed.
    pub iterations: u64,
    /// Last point `xᴺ⁺¹`.
    pub last: Vec<f64>,
    /// Averaged point in the run's default window.
    pub average: Vec<f64>,
    pub window: Window,
    /// `(k, population gap of the running average)` at log-spaced `k`.
    pub gaps: Vec<(u64, f64)>,
    /// Stochastic gradients consumed.
    pub oracle_calls: u64,
    /// Samples drawn per restart stage, when the run is staged.
    pub stages: Vec<u64>,
    /// Stream position after the run.
    pub stream: SampleStream,
    pub(crate) averager: Averager,
}

impl RunTrace {
    /// Trace assembled from an explicit iterate list (`x¹..xᴺ`).
    pub fn from_iterates(iterates: &[Vec<f64>], window: Window) -> Result<Self> {
        let first = iterates.first().ok_or_else(|| Error::input("need at least one iterate"))?;
        let mut avg = Averager::new(first.len(), iterates.len() as u64);
        for x in iterates {
            avg.push(x);
        }
        Ok(RunTrace {
            iterations: iterates.len() as u64,
            last: iterates.last().cloned().unwrap_or_default(),
            average: avg.mean(window),
            window,
            gaps: Vec::new(),
            oracle_calls: 0,
            stages: Vec::new(),
            stream: SampleStream::new(0),
            averager: avg,
        })
    }
}

pub fn average_iterates(trace: &RunTrace, window: Window) -> Vec<f64> {
    trace.averager.mean(window)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SgdOptions {
    /// Averaging window; `None` picks tail-half for strongly convex schedules.
    pub window: Option<Window>,
    pub record_gaps: bool,
}

/// `N` steps of `x^{k+1} = mirror_step(Q, x^k, ∇f(x^k, ξ^k), γ_k)` from `x¹ = x0`.
pub fn sgd_run(
    p: &ProblemInstance,
    schedule: StepSchedule,
    n: u64,
    stream: SampleStream,
    x0: &[f64],
) -> Result<RunTrace> {
    sgd_run_with(p, schedule, n, stream, x0, SgdOptions::default())
}

pub fn sgd_run_with(
    p: &ProblemInstance,
    mut schedule: StepSchedule,
    n: u64,
    mut stream: SampleStream,
    x0: &[f64],
    opts: SgdOptions,
) -> Result<RunTrace> {
    if n == 0 {
        return Err(Error::input("iteration count must be at least 1"));
    }
    let set = p.feasible_set();
    crate::error::check_dim(set.dimension(), x0.len())?;
    if !contains(set, x0, DEFAULT_TOL)? {
        return Err(Error::Precondition("sgd_run: x0 lies outside the feasible set".into()));
    }
    let window = opts.window.unwrap_or(if schedule.is_strongly_convex() {
        Window::TailHalf
    } else {
        Window::Full
    });
    let checkpoints = if opts.record_gaps { checkpoint_schedule(n) } else { Vec::new() };
    let mut next_cp = 0;
    let mut gaps = Vec::with_capacity(checkpoints.len());

    let mut avg = Averager::new(x0.len(), n);
    let mut x = x0.to_vec();
    let mut g = vec![0.0; x.len()];
    for k in 1..=n {
        avg.push(&x);
        let xi = p.sample(&mut stream);
        p.grad_into(&x, &xi, &mut g);
        if !all_finite(&g) {
            return Err(Error::NonFinite {
                iteration: k,
                detail: format!("stochastic gradient {g:?} at x = {x:?}"),
            });
        }
        let gamma = schedule.step(k, &g)?;
        x = mirror_step(set, &x, &g, gamma)?;
        if next_cp < checkpoints.len() && checkpoints[next_cp] == k {
            gaps.push((k, population_gap(p, &avg.mean(Window::Full))?));
            next_cp += 1;
        }
    }
    Ok(RunTrace {
        iterations: n,
        last: x,
        average: avg.mean(window),
        window,
        gaps,
        oracle_calls: n,
        stages: Vec::new(),
        stream,
        averager: avg,
    })
}

/// Up to [`MAX_CHECKPOINTS`] distinct, log-spaced iteration indices in `1..=n`, always including `n`.
pub(crate) fn checkpoint_schedule(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let m = MAX_CHECKPOINTS as f64;
    for i in 0..MAX_CHECKPOINTS {
        let k = ((n as f64).powf(i as f64 / (m - 1.0))).round() as u64;
        let k = k.clamp(1, n);
        if out.last() != Some(&k) {
            out.push(k);
        }
    }
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FeasibleSet;
    use crate::problems::{Sample, ProblemInstance};
    use proptest::prelude::*;

    fn scalar_gaussian() -> ProblemInstance {
        ProblemInstance::gaussian_mean(vec![3.0], 1.0, None, FeasibleSet::unconstrained(1).unwrap()).unwrap()
    }

    #[test]
    fn inverse_step_reproduces_sample_mean() {
        let p = scalar_gaussian();
        let stream = SampleStream::new(1);
        let trace = sgd_run(&p, StepSchedule::inverse_strong(2.0).unwrap(), 2, stream, &[0.0]).unwrap();
        let mut s = stream;
        let mut total = 0.0;
        for _ in 0..2 {
            let Sample::Point(v) = p.sample(&mut s) else { unreachable!() };
            total += v[0];
        }
        assert!((trace.last[0] - total / 2.0).abs() < 1e-15);
        assert_eq!(trace.oracle_calls, 2);
        assert_eq!(trace.stream.counter, 2);
    }

    #[test]
    fn zero_noise_at_optimum_keeps_average() {
        let p = ProblemInstance::norm_power(2, 2.0, 0.0).unwrap();
        let trace = sgd_run(&p, StepSchedule::decreasing(1.0, 2.0).unwrap(), 50, SampleStream::new(3), &[0.0, 0.0])
            .unwrap();
        assert_eq!(trace.average, vec![0.0, 0.0]);
    }

    #[test]
    fn projected_first_step() {
        let set = FeasibleSet::l2_ball_origin(2, 1.0).unwrap();
        let x = mirror_step(&set, &[0.0, 0.0], &[-20.0, 0.0], 0.1).unwrap();
        assert_eq!(x, vec![1.0, 0.0]);
    }

    #[test]
    fn averaging_windows() {
        let it = |v: &[f64]| v.iter().map(|x| vec![*x]).collect::<Vec<_>>();
        let t = RunTrace::from_iterates(&it(&[1.0, 2.0, 3.0]), Window::Full).unwrap();
        assert_eq!(average_iterates(&t, Window::Full), vec![2.0]);
        let t = RunTrace::from_iterates(&it(&[1.0, 2.0, 3.0, 4.0]), Window::Full).unwrap();
        assert_eq!(average_iterates(&t, Window::TailHalf), vec![3.5]);
        let t = RunTrace::from_iterates(&it(&[0.7; 5]), Window::Full).unwrap();
        for w in [Window::Full, Window::TailHalf] {
            assert!((average_iterates(&t, w)[0] - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let p = ProblemInstance::gaussian_mean(vec![f64::MAX], 1.0, None, FeasibleSet::unconstrained(1).unwrap())
            .unwrap();
        let r = sgd_run(&p, StepSchedule::inverse_strong(2.0).unwrap(), 10, SampleStream::new(1), &[-f64::MAX]);
        assert!(matches!(r, Err(Error::NonFinite { iteration: 1, .. })));
    }

    #[test]
    fn checkpoints_are_bounded_and_increasing() {
        for n in [1, 7, 600, 1_000_000] {
            let c = checkpoint_schedule(n);
            assert!(c.len() <= MAX_CHECKPOINTS + 1);
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(*c.last().unwrap(), n);
        }
        let p = scalar_gaussian();
        let opts = SgdOptions { window: None, record_gaps: true };
        let t = sgd_run_with(&p, StepSchedule::inverse_strong(2.0).unwrap(), 10_000, SampleStream::new(1), &[0.0], opts)
            .unwrap();
        assert!(!t.gaps.is_empty() && t.gaps.len() <= MAX_CHECKPOINTS + 1);
    }

    #[test]
    fn default_windows_follow_schedule() {
        let p = scalar_gaussian();
        let t = sgd_run(&p, StepSchedule::inverse_strong(2.0).unwrap(), 4, SampleStream::new(1), &[0.0]).unwrap();
        assert_eq!(t.window, Window::TailHalf);
        let t = sgd_run(&p, StepSchedule::decreasing(1.0, 1.0).unwrap(), 4, SampleStream::new(1), &[0.0]).unwrap();
        assert_eq!(t.window, Window::Full);
    }

    fn arb_problem() -> impl Strategy<Value = ProblemInstance> {
        (0usize..4).prop_map(|k| match k {
            0 => ProblemInstance::norm_power(3, 1.5, 1.0).unwrap(),
            1 => ProblemInstance::ridge(vec![2.0, 0.0, -1.0], 1.0, 0.5, FeasibleSet::l1_ball_origin(3, 1.0).unwrap())
                .unwrap(),
            2 => ProblemInstance::soft_svm(3, 2.0, 1000, 0, FeasibleSet::simplex(3).unwrap()).unwrap(),
            _ => ProblemInstance::gaussian_mean(vec![1.0, 1.0, 1.0], 2.0, None, FeasibleSet::l2_ball_origin(3, 0.5).unwrap())
                .unwrap(),
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn runs_stay_feasible_and_deterministic(p in arb_problem(), seed in any::<u64>(), n in 1u64..200) {
            let x0 = p.feasible_set().center_point();
            let sched = StepSchedule::adagrad(1.0, 1.0).unwrap();
            let a = sgd_run(&p, sched.clone(), n, SampleStream::new(seed), &x0).unwrap();
            let b = sgd_run(&p, sched, n, SampleStream::new(seed), &x0).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(contains(p.feasible_set(), &a.last, DEFAULT_TOL).unwrap());
            prop_assert!(contains(p.feasible_set(), &a.average, DEFAULT_TOL).unwrap());
            prop_assert_eq!(a.oracle_calls, n);
        }
    }
}
