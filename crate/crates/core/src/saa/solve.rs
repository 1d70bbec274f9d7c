use crate::error::{Error, Result};
use crate::geometry::{contains, project, DEFAULT_TOL};
use crate::linalg::{norm2, norm2_sq};
use crate::problems::{Family, ProblemConstants, ProblemInstance, Sample, SampleStream};
use crate::sa::TargetAccuracy;

use super::empirical::{build_empirical, EmpiricalObjective};
use super::prox::{composite_prox_step, Composite};

/// How an ERM solution's accuracy was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// `δ = ∞`: nothing to certify.
    Vacuous,
    /// `‖v‖²/(2μ)` for an exact subgradient `v` of the full objective.
    StrongConvexity,
    /// Objective gap to the closed-form empirical minimizer.
    ClosedForm,
    /// Relative objective decrease per sweep fell below `δ/10`.
    Plateau,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmSolution {
    pub point: Vec<f64>,
    /// Last certificate value (an upper bound on the gap for the first two kinds).
    pub certificate: f64,
    pub kind: CertificateKind,
    /// False when the budget ran out before the certificate reached `δ`.
    pub certified: bool,
    pub iterations: u64,
}

/// Exact minimizer of the unregularized empirical NormPower objective on the unit ball.
pub fn norm_power_erm_closed_form(e: &EmpiricalObjective<'_>) -> Result<Vec<f64>> {
    let Family::NormPower { s, .. } = e.problem().family() else {
        return Err(Error::input(format!("closed form needs norm_power, got {}", e.problem().name())));
    };
    if *e.composite() != Composite::None {
        return Err(Error::input("closed form needs an objective without composite term"));
    }
    let n = e.dimension();
    let mut mean = vec![0.0; n];
    for xi in e.samples() {
        if let Sample::Point(v) = xi {
            for (a, b) in mean.iter_mut().zip(v) {
                *a += b;
            }
        }
    }
    let m = e.len() as f64;
    mean.iter_mut().for_each(|a| *a /= m);
    Ok(norm_power_minimizer(&mean, *s))
}

/// `argmin_{‖x‖≤1} ‖x‖ˢ − s⟨ξ̄, x⟩ = ξ̄/‖ξ̄‖ᵇ`, with `b = 1` outside the unit
/// ball and `b = (s−2)/(s−1)` inside. At `s = 1` the interior solution is 0.
pub(crate) fn norm_power_minimizer(mean: &[f64], s: f64) -> Vec<f64> {
    let r = norm2(mean);
    if r == 0.0 {
        return vec![0.0; mean.len()];
    }
    let b = if r > 1.0 {
        1.0
    } else if s == 1.0 {
        return vec![0.0; mean.len()];
    } else {
        (s - 2.0) / (s - 1.0)
    };
    let scale = r.powf(-b);
    mean.iter().map(|v| v * scale).collect()
}

/// Solves `min_{x∈Q} f̄(x)` to accuracy `target_delta` within `budget` iterations,
/// starting from the centre of the feasible set.
pub fn solve_erm(e: &EmpiricalObjective<'_>, target_delta: f64, budget: u64) -> Result<ErmSolution> {
    let x0 = e.problem().feasible_set().center_point();
    solve_erm_from(e, &x0, target_delta, budget)
}

pub fn solve_erm_from(e: &EmpiricalObjective<'_>, x0: &[f64], target_delta: f64, budget: u64) -> Result<ErmSolution> {
    if !(target_delta >= 0.0) {
        return Err(Error::input(format!("target delta must be nonnegative, got {target_delta}")));
    }
    let set = e.problem().feasible_set();
    crate::error::check_dim(e.dimension(), x0.len())?;
    if !contains(set, x0, DEFAULT_TOL)? {
        return Err(Error::Precondition("solve_erm: start point lies outside the feasible set".into()));
    }
    if target_delta == f64::INFINITY {
        return Ok(ErmSolution {
            point: x0.to_vec(),
            certificate: f64::INFINITY,
            kind: CertificateKind::Vacuous,
            certified: true,
            iterations: 0,
        });
    }
    let closed = match (e.problem().family(), e.composite()) {
        (Family::NormPower { .. }, Composite::None) => {
            let xh = norm_power_erm_closed_form(e)?;
            let v = e.value_grad_raw(&xh).0;
            Some((xh, v))
        }
        _ => None,
    };
    let mu = e.strong_convexity();
    let l = e.smoothness();
    if l.is_finite() {
        prox_gradient(e, x0, target_delta, budget, mu, l, closed.map(|c| c.1))
    } else {
        subgradient(e, x0, target_delta, budget, closed.map(|c| c.1))
    }
}

fn prox_gradient(
    e: &EmpiricalObjective<'_>,
    x0: &[f64],
    delta: f64,
    budget: u64,
    mu: f64,
    l: f64,
    f_hat: Option<f64>,
) -> Result<ErmSolution> {
    let set = e.problem().feasible_set();
    let comp = e.composite();
    let step = 1.0 / l;
    let mut x = x0.to_vec();
    let (mut fx, mut gx) = e.data_value_grad(&x);
    fx += comp.value(&x);
    let kind = if mu > 0.0 {
        CertificateKind::StrongConvexity
    } else if f_hat.is_some() {
        CertificateKind::ClosedForm
    } else {
        CertificateKind::Plateau
    };
    let mut cert = f64::INFINITY;
    let mut k = 0;
    while k < budget {
        k += 1;
        let xn = composite_prox_step(&x, &gx, step, comp, set)?;
        let (mut fn_, gn) = e.data_value_grad(&xn);
        fn_ += comp.value(&xn);
        cert = match kind {
            CertificateKind::StrongConvexity => {
                // v = L(x − x⁺) − ∇f(x) + ∇f(x⁺) lies in ∂(f + composite + ι_Q)(x⁺).
                let v: Vec<f64> = (0..x.len()).map(|j| l * (x[j] - xn[j]) - gx[j] + gn[j]).collect();
                norm2_sq(&v) / (2.0 * mu)
            }
            CertificateKind::ClosedForm => (fn_ - f_hat.unwrap_or(0.0)).max(0.0),
            _ => (fx - fn_).max(0.0) / fx.abs().max(1.0),
        };
        x = xn;
        fx = fn_;
        gx = gn;
        let done = match kind {
            CertificateKind::Plateau => cert < delta / 10.0,
            _ => cert <= delta,
        };
        if done {
            return Ok(ErmSolution {
                point: x,
                certificate: cert,
                kind,
                certified: true,
                iterations: k,
            });
        }
    }
    log::warn!("solve_erm: budget of {budget} iterations exhausted (certificate {cert:e}, target {delta:e})");
    Ok(ErmSolution {
        point: x,
        certificate: cert,
        kind,
        certified: false,
        iterations: k,
    })
}

/// Projected subgradient method. Uses Polyak steps when the optimal value is
/// known, otherwise `D/(‖g‖√k)`; returns the best iterate seen.
fn subgradient(e: &EmpiricalObjective<'_>, x0: &[f64], delta: f64, budget: u64, f_hat: Option<f64>) -> Result<ErmSolution> {
    let set = e.problem().feasible_set();
    let diam = if set.is_bounded() {
        crate::geometry::set_diameter(set, crate::geometry::NormTag::L2)?
    } else {
        1.0
    };
    let kind = if f_hat.is_some() {
        CertificateKind::ClosedForm
    } else {
        CertificateKind::Plateau
    };
    let mut x = x0.to_vec();
    let (mut fx, mut g) = e.value_grad_raw(&x);
    let mut best = (fx, x.clone());
    let mut sweep_start = fx;
    let sweep = 50;
    let mut cert = f64::INFINITY;
    let mut k = 0;
    while k < budget {
        k += 1;
        let gn = norm2(&g);
        if let Some(fh) = f_hat {
            cert = (best.0 - fh).max(0.0);
            if cert <= delta {
                break;
            }
        }
        if gn == 0.0 {
            cert = 0.0;
            break;
        }
        let gamma = match f_hat {
            Some(fh) => (fx - fh).max(0.0) / (gn * gn),
            None => diam / (gn * (k as f64).sqrt()),
        };
        if gamma == 0.0 {
            cert = 0.0;
            break;
        }
        let moved: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - gamma * b).collect();
        x = project(set, &moved)?;
        (fx, g) = e.value_grad_raw(&x);
        if fx < best.0 {
            best = (fx, x.clone());
        }
        if f_hat.is_none() && k % sweep == 0 {
            cert = (sweep_start - best.0).max(0.0) / best.0.abs().max(1.0);
            sweep_start = best.0;
            if cert < delta / 10.0 {
                break;
            }
        }
    }
    if let Some(fh) = f_hat {
        cert = (best.0 - fh).max(0.0);
    }
    let certified = match kind {
        CertificateKind::Plateau => cert < delta / 10.0,
        _ => cert <= delta,
    };
    if !certified {
        log::warn!("solve_erm: budget of {budget} iterations exhausted (certificate {cert:e}, target {delta:e})");
    }
    Ok(ErmSolution {
        point: best.1,
        certificate: cert,
        kind,
        certified,
        iterations: k,
    })
}

/// Inner accuracy `δ = ε²μ/(8M²)` sufficient for strongly convex SAA.
pub fn strong_delta(target: &TargetAccuracy, c: &ProblemConstants) -> Result<f64> {
    if !(c.mu_p > 0.0) {
        return Err(Error::NotApplicable("strong_delta needs a positive strong-convexity modulus".into()));
    }
    Ok(target.epsilon * target.epsilon * c.mu_p / (8.0 * c.m_p * c.m_p))
}

/// Regularization weight `μ = ε/R²` and inner accuracy `δ = ε³/(8M²R²)`.
pub fn tikhonov_parameters(epsilon: f64, m: f64, r: f64) -> (f64, f64) {
    (epsilon / (r * r), epsilon.powi(3) / (8.0 * m * m * r * r))
}

/// Sample size `⌈c·M²R²/ε²·ln(max(ln(MR/ε), 1)/β)⌉` for the regularized pipeline.
pub fn tikhonov_sample_size(epsilon: f64, beta: f64, m: f64, r: f64, multiplier: f64) -> u64 {
    let inner = (m * r / epsilon).ln().max(1.0);
    let n = multiplier * m * m * r * r / (epsilon * epsilon) * (inner / beta).ln();
    (n.ceil() as u64).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub point: Vec<f64>,
    pub mu: f64,
    pub delta: f64,
    pub samples: u64,
    pub solution: ErmSolution,
}

/// Tikhonov-regularized ERM: freeze `n` samples (or the prescribed count when
/// `None`), add `(ε/(2R²))‖x − center‖²`, and solve to `δ = ε³/(8M²R²)`.
pub fn regularized_pipeline(
    p: &ProblemInstance,
    target: &TargetAccuracy,
    n: Option<u64>,
    stream: SampleStream,
    x0: &[f64],
) -> Result<PipelineOutput> {
    regularized_pipeline_with(p, target, n, stream, x0, None, 1.0)
}

pub fn regularized_pipeline_with(
    p: &ProblemInstance,
    target: &TargetAccuracy,
    n: Option<u64>,
    stream: SampleStream,
    x0: &[f64],
    center: Option<Vec<f64>>,
    multiplier: f64,
) -> Result<PipelineOutput> {
    let set = p.feasible_set();
    if !set.is_bounded() {
        return Err(Error::NotApplicable("regularized pipeline needs a bounded feasible set".into()));
    }
    let c = p.constants();
    if !c.m_p.is_finite() {
        return Err(Error::NotApplicable(format!("{} has no finite Lipschitz bound", p.name())));
    }
    let r = set.max_norm2();
    let (mu, delta) = tikhonov_parameters(target.epsilon, c.m_p, r);
    let samples = n.unwrap_or_else(|| tikhonov_sample_size(target.epsilon, target.beta, c.m_p, r, multiplier));
    let center = center.unwrap_or_else(|| vec![0.0; p.dimension()]);
    let e = build_empirical(p, samples as usize, stream, Composite::HalfSqL2 { mu, center })?;
    let solution = solve_erm_from(&e, x0, delta, 1_000_000)?;
    Ok(PipelineOutput {
        point: solution.point.clone(),
        mu,
        delta,
        samples,
        solution,
    })
}
