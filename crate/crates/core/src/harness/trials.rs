use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sa::TargetAccuracy;

/// What one trial reports back to the harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// Samples drawn from the trial's stream.
    pub samples: u64,
    pub gap: f64,
}

/// Something that can be run once per seed. `n` is the requested sample
/// budget; `None` lets the solver use its own prescription.
pub trait Experiment: Sync {
    fn solver_id(&self) -> String;
    fn problem_id(&self) -> String;
    fn trial(&self, n: Option<u64>, target: &TargetAccuracy, seed: u64) -> Result<TrialOutcome>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// 1-based index within the run.
    pub trial: u64,
    pub seed: u64,
    pub solver: String,
    pub problem: String,
    /// Samples consumed; the requested budget for failed trials.
    pub n: u64,
    /// `NaN` for failed trials.
    pub gap: f64,
    /// Zero unless timing was requested, so reports stay byte-reproducible.
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn succeeded(&self, epsilon: f64) -> bool {
        !self.failed() && self.gap <= epsilon
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialOptions {
    pub record_timing: bool,
}

fn pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let k: usize = std::env::var("SASTRA_THREADS").ok()?.trim().parse().ok()?;
        rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build().ok()
    })
    .as_ref()
}

/// Runs `f` inside the pool capped by `SASTRA_THREADS`, or the global pool.
pub fn in_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match pool() {
        Some(p) => p.install(f),
        None => f(),
    }
}

/// `trials` independent runs with seeds `base_seed + 1 ..= base_seed + trials`,
/// returned in trial order. A failing trial is recorded and the run continues.
pub fn run_trials(
    exp: &dyn Experiment,
    n: Option<u64>,
    target: &TargetAccuracy,
    trials: u64,
    base_seed: u64,
    opts: TrialOptions,
) -> Result<Vec<TrialResult>> {
    if trials == 0 {
        return Err(Error::input("need at least one trial"));
    }
    let solver = exp.solver_id();
    let problem = exp.problem_id();
    let mut out: Vec<TrialResult> = in_pool(|| {
        (1..=trials)
            .into_par_iter()
            .map(|t| {
                let seed = base_seed.wrapping_add(t);
                let start = Instant::now();
                let r = exp.trial(n, target, seed);
                let wall_ms = if opts.record_timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                let (n, gap, error) = match r {
                    Ok(o) => (o.samples, o.gap, None),
                    Err(e) => {
                        log::warn!("trial {t} (seed {seed}) failed: {e}");
                        (n.unwrap_or(0), f64::NAN, Some(e.to_string()))
                    }
                };
                TrialResult {
                    trial: t,
                    seed,
                    solver: solver.clone(),
                    problem: problem.clone(),
                    n,
                    gap,
                    wall_ms,
                    error,
                }
            })
            .collect()
    });
    out.sort_by_key(|r| r.trial);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessEstimate {
    pub estimate: f64,
    /// 95% Wilson score interval.
    pub lower: f64,
    pub upper: f64,
    pub trials: u64,
    pub successes: u64,
}

const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / t;
    let centre = (p + z2 / (2.0 * t)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Fraction of trials with gap `≤ epsilon`; failed trials count as misses.
pub fn success_probability(results: &[TrialResult], epsilon: f64) -> Result<SuccessEstimate> {
    if results.is_empty() {
        return Err(Error::input("success probability of an empty trial list"));
    }
    let trials = results.len() as u64;
    let successes = results.iter().filter(|r| r.succeeded(epsilon)).count() as u64;
    let (lower, upper) = wilson_interval(successes, trials);
    Ok(SuccessEstimate {
        estimate: successes as f64 / trials as f64,
        lower,
        upper,
        trials,
        successes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub n: u64,
    pub successes: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityResult {
    /// Smallest probed `N` that met the success criterion, or `max_n` when saturated.
    pub n: u64,
    pub saturated: bool,
    pub successes: u64,
    pub trials: u64,
    pub probes: Vec<Probe>,
}

/// `successes/trials ≥ 1 − β`, decided in integers so that e.g. 35/50 meets β = 0.3.
fn meets(successes: u64, trials: u64, beta: f64) -> bool {
    successes as f64 >= ((1.0 - beta) * trials as f64 - 1e-9).ceil()
}

/// Bisection stops once `hi ≤ RESOLUTION·lo`.
pub const RESOLUTION: f64 = 1.1;
pub const DEFAULT_PROBE_TRIALS: u64 = 50;

/// Smallest `N` with success fraction `≥ 1 − β`: doubling from 1, then
/// geometric bisection inside the last doubling bracket. Probe `j` uses seeds
/// `base_seed + j·trials + 1 ..= base_seed + (j+1)·trials`.
pub fn find_sample_complexity(
    exp: &dyn Experiment,
    target: &TargetAccuracy,
    trials: u64,
    max_n: u64,
    base_seed: u64,
) -> Result<ComplexityResult> {
    let mut next_probe = 0;
    search(exp, target, trials, max_n, base_seed, &mut next_probe)
}

fn search(
    exp: &dyn Experiment,
    target: &TargetAccuracy,
    trials: u64,
    max_n: u64,
    base_seed: u64,
    next_probe: &mut u64,
) -> Result<ComplexityResult> {
    if max_n == 0 {
        return Err(Error::input("max N must be at least 1"));
    }
    let mut probes = Vec::new();
    let mut probe = |n: u64, probes: &mut Vec<Probe>| -> Result<(bool, u64)> {
        let seed = base_seed.wrapping_add(*next_probe * trials);
        *next_probe += 1;
        let rs = run_trials(exp, Some(n), target, trials, seed, TrialOptions::default())?;
        let est = success_probability(&rs, target.epsilon)?;
        probes.push(Probe {
            n,
            successes: est.successes,
            trials,
        });
        log::debug!("probe N = {n}: {}/{trials}", est.successes);
        Ok((meets(est.successes, trials, target.beta), est.successes))
    };
    let mut lo = 0;
    let mut hi = 1;
    let mut hi_succ;
    loop {
        let (ok, s) = probe(hi, &mut probes)?;
        if ok {
            hi_succ = s;
            break;
        }
        if hi >= max_n {
            return Ok(ComplexityResult {
                n: max_n,
                saturated: true,
                successes: s,
                trials,
                probes,
            });
        }
        lo = hi;
        hi = (hi * 2).min(max_n);
    }
    while lo > 0 && hi - lo > 1 && (hi as f64) > RESOLUTION * lo as f64 {
        let mid = ((lo as f64 * hi as f64).sqrt().round() as u64).clamp(lo + 1, hi - 1);
        let (ok, s) = probe(mid, &mut probes)?;
        if ok {
            hi = mid;
            hi_succ = s;
        } else {
            lo = mid;
        }
    }
    Ok(ComplexityResult {
        n: hi,
        saturated: false,
        successes: hi_succ,
        trials,
        probes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals in log space.
    pub residual: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::input("rate fit needs at least two points"));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::input(format!("rate fit needs positive data, got {p:?}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::input("rate fit needs at least two distinct x values"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(RateFit {
        slope,
        intercept,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub beta: f64,
    pub n: u64,
    pub trials: u64,
    pub successes: u64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleComplexityCurve {
    pub points: Vec<CurvePoint>,
    /// Slope of `ln N` against `ln(1/ε)`, i.e. the exponent `a` in `N ∝ ε^{−a}`.
    pub fit: Option<RateFit>,
    /// False when a smaller ε needed fewer samples than a larger one.
    pub monotone: bool,
}

impl SampleComplexityCurve {
    pub fn saturated(&self) -> bool {
        self.points.iter().any(|p| p.saturated)
    }
}

/// `find_sample_complexity` at each ε, with all probes on disjoint seed ranges.
pub fn sample_complexity_curve(
    exp: &dyn Experiment,
    epsilons: &[f64],
    beta: f64,
    trials: u64,
    max_n: u64,
    base_seed: u64,
) -> Result<SampleComplexityCurve> {
    let mut next_probe = 0;
    let mut points = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let target = TargetAccuracy::new(eps, beta)?;
        let r = search(exp, &target, trials, max_n, base_seed, &mut next_probe)?;
        points.push(CurvePoint {
            epsilon: eps,
            beta,
            n: r.n,
            trials,
            successes: r.successes,
            saturated: r.saturated,
        });
    }
    let mut sorted: Vec<&CurvePoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let monotone = sorted.windows(2).all(|w| w[0].n >= w[1].n);
    if !monotone {
        log::warn!("sample complexity curve is not monotone in epsilon");
    }
    let fit = if points.len() >= 2 {
        Some(fit_rate(&points.iter().map(|p| (1.0 / p.epsilon, p.n as f64)).collect::<Vec<_>>())?)
    } else {
        None
    };
    Ok(SampleComplexityCurve { points, fit, monotone })
}

/// Median population gap at each budget in `ns` over `trials` seeds, and the
/// fitted slope of `ln gap` against `ln N`.
pub fn median_gap_curve(
    exp: &dyn Experiment,
    ns: &[u64],
    target: &TargetAccuracy,
    trials: u64,
    base_seed: u64,
) -> Result<(Vec<(u64, f64)>, RateFit)> {
    let mut pts = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let rs = run_trials(exp, Some(n), target, trials, base_seed.wrapping_add(i as u64 * trials), TrialOptions::default())?;
        if let Some(r) = rs.iter().find(|r| r.failed()) {
            return Err(Error::input(format!("trial {} failed: {}", r.trial, r.error.as_deref().unwrap_or(""))));
        }
        pts.push((n, median(rs.iter().map(|r| r.gap).collect())));
    }
    let fit = fit_rate(&pts.iter().map(|&(n, g)| (n as f64, g)).collect::<Vec<_>>())?;
    Ok((pts, fit))
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}
