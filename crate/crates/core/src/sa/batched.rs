//! Mini-batch gradient oracle and the batched accelerated method.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{contains, project, FeasibleSet, DEFAULT_TOL};
use crate::linalg::all_finite;
use crate::problems::{ProblemInstance, SampleStream};

use super::sgd::{Averager, RunTrace, Window};
use super::TargetAccuracy;

/// Averages `r` fresh stochastic gradients per query.
#[derive(Debug, Clone)]
pub struct BiasedSmoothOracle<'a> {
    problem: &'a ProblemInstance,
    batch: u64,
    l: f64,
    delta: f64,
}

impl<'a> BiasedSmoothOracle<'a> {
    /// Bias budget `δ = σ²/(2Lr)` of an `r`-batch.
    pub fn bias_budget(sigma_sq: f64, l: f64, r: u64) -> f64 {
        sigma_sq / (2.0 * l * r as f64)
    }

    pub fn batch_size(&self) -> u64 {
        self.batch
    }

    pub fn smoothness(&self) -> f64 {
        self.l
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Mean of `r` stochastic gradients at `x`, consuming `r` samples.
    pub fn query(&self, x: &[f64], stream: &mut SampleStream) -> Vec<f64> {
        let mut acc = vec![0.0; x.len()];
        let mut g = vec![0.0; x.len()];
        for _ in 0..self.batch {
            let xi = self.problem.sample(stream);
            self.problem.grad_into(x, &xi, &mut g);
            for (a, v) in acc.iter_mut().zip(&g) {
                *a += v;
            }
        }
        let r = self.batch as f64;
        acc.iter_mut().for_each(|a| *a /= r);
        acc
    }
}

/// Oracle over `p` with batch size `r`; `σ²` is taken as the declared `σ*²`.
pub fn make_minibatch_oracle(p: &ProblemInstance, r: u64) -> Result<BiasedSmoothOracle<'_>> {
    if r == 0 {
        return Err(Error::input("batch size must be at least 1"));
    }
    let c = p.constants();
    if !c.l.is_finite() {
        return Err(Error::NotApplicable(format!("{} is not smooth", p.name())));
    }
    Ok(BiasedSmoothOracle {
        problem: p,
        batch: r,
        l: c.l,
        delta: BiasedSmoothOracle::bias_budget(c.sigma_star_sq, c.l, r),
    })
}

/// Iteration count `N = ⌈c·√(LR²/ε)⌉` and batch `r = max(1, ⌈σ²N/(Lε)⌉)`.
pub fn batched_plan(l: f64, radius: f64, sigma_sq: f64, epsilon: f64, multiplier: f64) -> (u64, u64) {
    let n = ((multiplier * (l * radius * radius / epsilon).sqrt()).ceil() as u64).max(1);
    let r = ((sigma_sq * n as f64 / (l * epsilon)).ceil() as u64).max(1);
    (n, r)
}

/// Projected accelerated gradient descent with step `1/(2L)` and momentum
/// `(k−1)/(k+2)`. Returns the iterates `x¹..x^{N+1}` with `x¹ = x0`.
pub fn accelerated_descent<F>(set: &FeasibleSet, l: f64, n: u64, x0: &[f64], mut grad: F) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let step = 1.0 / (2.0 * l);
    let mut xs = Vec::with_capacity(n as usize + 1);
    xs.push(x0.to_vec());
    let mut prev = x0.to_vec();
    let mut x = x0.to_vec();
    for k in 1..=n {
        let beta = (k as f64 - 1.0) / (k as f64 + 2.0);
        let y: Vec<f64> = x.iter().zip(&prev).map(|(a, b)| a + beta * (a - b)).collect();
        let g = grad(&y);
        if !all_finite(&g) {
            return Err(Error::NonFinite {
                iteration: k,
                detail: format!("gradient {g:?}"),
            });
        }
        let moved: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        prev = std::mem::replace(&mut x, project(set, &moved)?);
        xs.push(x.clone());
    }
    Ok(xs)
}

/// Accelerated method driven by the mini-batch oracle, sized from `target.epsilon`
/// and a bound `radius ≥ ‖x0 − x*‖`. The returned `average` is the last iterate.
pub fn batched_accelerated_run(
    p: &ProblemInstance,
    target: &TargetAccuracy,
    radius: f64,
    stream: SampleStream,
    x0: &[f64],
) -> Result<RunTrace> {
    batched_accelerated_run_with(p, target, radius, 1.0, stream, x0)
}

pub fn batched_accelerated_run_with(
    p: &ProblemInstance,
    target: &TargetAccuracy,
    radius: f64,
    multiplier: f64,
    stream: SampleStream,
    x0: &[f64],
) -> Result<RunTrace> {
    let c = p.constants();
    if !c.l.is_finite() {
        return Err(Error::NotApplicable(format!("{} is not smooth", p.name())));
    }
    if matches!(p.feasible_set(), FeasibleSet::Simplex { .. }) {
        return Err(Error::Unsupported("batched accelerated method runs on balls or the whole space".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::input("radius must be positive"));
    }
    check_dim(p.dimension(), x0.len())?;
    if !contains(p.feasible_set(), x0, DEFAULT_TOL)? {
        return Err(Error::Precondition("x0 lies outside the feasible set".into()));
    }
    let (n, r) = batched_plan(c.l, radius, c.sigma_star_sq, target.epsilon, multiplier);
    let oracle = make_minibatch_oracle(p, r)?;
    let mut stream = stream;
    let xs = accelerated_descent(p.feasible_set(), c.l, n, x0, |y| oracle.query(y, &mut stream))?;
    let mut avg = Averager::new(x0.len(), n);
    for x in &xs[..n as usize] {
        avg.push(x);
    }
    let last = xs[n as usize].clone();
    Ok(RunTrace {
        iterations: n,
        average: last.clone(),
        last,
        window: Window::Full,
        gaps: Vec::new(),
        oracle_calls: n * r,
        stages: vec![r],
        stream,
        averager: avg,
    })
}
