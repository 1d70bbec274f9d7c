//! Synthetic stochastic problems `min_{x∈Q} E f(x, ξ)` with exact ground truth.
//!
//! Each [`ProblemInstance`] owns its sampler, per-sample loss and subgradient,
//! the population optimum `x*`, and a set of declared constants. Lipschitz and
//! smoothness constants are Euclidean; for `p = 1` geometry they remain valid
//! (conservative) upper bounds because `‖·‖_∞ ≤ ‖·‖₂`.

mod stream;

pub use stream::SampleStream;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{contains, project, FeasibleSet, NormTag, DEFAULT_TOL};
use crate::linalg::{dot, norm1, norm2, sign, soft_threshold};

/// One realisation of `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    /// A vector observation (GaussianMean, NormPower).
    Point(Vec<f64>),
    /// A labelled design row `(y, a)` (regression and SVM families).
    Labeled { y: f64, a: Vec<f64> },
    /// Index of a finite-sum term.
    Term(usize),
}

/// Declared problem constants. Infinite values mean "not bounded".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// Lipschitz constant `M_p` of `f(·, ξ)` on `Q`.
    pub m_p: f64,
    /// Gradient Lipschitz constant (∞ for nonsmooth families).
    pub l: f64,
    /// Strong-convexity modulus of the population objective.
    pub mu_p: f64,
    /// `E‖∇f(x*, ξ)‖₂²`.
    pub sigma_star_sq: f64,
    /// Growth exponent `s ≥ 1`.
    pub s: f64,
    /// Growth modulus: `f(x) − f* ≥ mu_ps·‖x − x*‖ˢ`.
    pub mu_ps: f64,
    /// Sub-Gaussian variance proxy of the stochastic gradient.
    pub lambda_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `f(x, ξ) = ‖ξ − x‖²`, `ξ ~ N(mean, σ²I)`, optionally truncated to
    /// `|ξ_i − mean_i| ≤ truncation·σ` coordinatewise.
    GaussianMean {
        mean: Vec<f64>,
        sigma: f64,
        truncation: Option<f64>,
    },
    /// `f(x, (y, a)) = (y − ⟨a, x⟩)²`, `a` uniform on the sphere of radius
    /// `design_radius`, `y = ⟨a, x_true⟩ + e`, `e ~ U(−noise, noise)`.
    RidgeRegression {
        x_true: Vec<f64>,
        design_radius: f64,
        noise: f64,
    },
    /// Ridge data with the deterministic penalty `λ‖x‖₁` added to every sample loss.
    Lasso {
        x_true: Vec<f64>,
        design_radius: f64,
        noise: f64,
        lambda: f64,
    },
    /// `f(x, (y, a)) = max{0, 1 − y⟨x, a⟩}` with `a` uniform on the unit sphere and
    /// `P(y | a) ∝ exp(−max{0, 1 − y·θ·a₁})`. `reference` is `E[y·a]` estimated
    /// on a frozen pool; on sets inside the unit ball the hinge is always active,
    /// so the population objective is `1 − ⟨x, reference⟩`.
    SoftSvm {
        theta: f64,
        pool_size: usize,
        pool_seed: u64,
        reference: Vec<f64>,
        reference_stderr: f64,
    },
    /// `f(x, ξ) = ‖x‖₂ˢ − s⟨ξ, x⟩`, `ξ ~ N(0, σ²I)`, on the unit ℓ₂-ball.
    NormPower { s: f64, sigma: f64 },
    /// `f_t(x) = ½ Σ_j hess[t][j]·(x_j − centers[t][j])²`, `t` uniform.
    FiniteSumQuadratic {
        hess: Vec<Vec<f64>>,
        centers: Vec<Vec<f64>>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::GaussianMean { .. } => "gaussian_mean",
            Family::RidgeRegression { .. } => "ridge",
            Family::Lasso { .. } => "lasso",
            Family::SoftSvm { .. } => "soft_svm",
            Family::NormPower { .. } => "norm_power",
            Family::FiniteSumQuadratic { .. } => "finite_sum_quadratic",
        }
    }
}

/// Pool size used for the SoftSVM population reference unless overridden.
pub const SOFT_SVM_POOL: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    family: Family,
    set: FeasibleSet,
    norm: NormTag,
    x_star: Vec<f64>,
    fc_star: f64,
    constants: ProblemConstants,
}

impl ProblemInstance {
    pub fn gaussian_mean(mean: Vec<f64>, sigma: f64, truncation: Option<f64>, set: FeasibleSet) -> Result<Self> {
        check_dim(set.dimension(), mean.len())?;
        positive("sigma", sigma)?;
        if let Some(c) = truncation {
            positive("truncation", c)?;
        }
        if !mean.iter().all(|m| m.is_finite()) {
            return Err(Error::input("mean must be finite"));
        }
        let n = mean.len() as f64;
        let var = sigma * sigma * truncated_variance_factor(truncation);
        let x_star = project(&set, &mean)?;
        let offset = crate::linalg::dist2(&x_star, &mean);
        let m_p = match truncation {
            Some(c) if set.is_bounded() => 2.0 * (c * sigma * n.sqrt() + norm2(&mean) + set.max_norm2()),
            _ => f64::INFINITY,
        };
        let constants = ProblemConstants {
            m_p,
            l: 2.0,
            mu_p: 2.0,
            sigma_star_sq: 4.0 * (n * var + offset * offset),
            s: 2.0,
            mu_ps: 1.0,
            lambda_sq: 4.0 * sigma * sigma,
        };
        Self::finish(Family::GaussianMean { mean, sigma, truncation }, set, x_star, constants)
    }

    pub fn ridge(x_true: Vec<f64>, design_radius: f64, noise: f64, set: FeasibleSet) -> Result<Self> {
        check_dim(set.dimension(), x_true.len())?;
        positive("design_radius", design_radius)?;
        nonnegative("noise", noise)?;
        let x_star = project(&set, &x_true)?;
        let constants = regression_constants(&x_true, &x_star, design_radius, noise, 0.0, &set);
        Self::finish(Family::RidgeRegression { x_true, design_radius, noise }, set, x_star, constants)
    }

    /// Lasso over the whole space or an origin-centred ball (where the
    /// soft-threshold-then-project optimum is exact).
    pub fn lasso(x_true: Vec<f64>, design_radius: f64, noise: f64, lambda: f64, set: FeasibleSet) -> Result<Self> {
        check_dim(set.dimension(), x_true.len())?;
        positive("design_radius", design_radius)?;
        nonnegative("noise", noise)?;
        nonnegative("lambda", lambda)?;
        match &set {
            FeasibleSet::Unconstrained { .. } => {}
            FeasibleSet::L2Ball { center, .. } | FeasibleSet::L1Ball { center, .. }
                if center.iter().all(|c| *c == 0.0) => {}
            _ => {
                return Err(Error::Unsupported(
                    "lasso needs an unconstrained domain or an origin-centred ball".into(),
                ))
            }
        }
        let n = x_true.len() as f64;
        let curvature = 2.0 * design_radius * design_radius / n;
        let shrunk: Vec<f64> = x_true.iter().map(|v| soft_threshold(*v, lambda / curvature)).collect();
        let x_star = project(&set, &shrunk)?;
        let mut constants = regression_constants(&x_true, &x_star, design_radius, noise, lambda, &set);
        // The penalty adds the deterministic term λ·sign(x*) to every sample gradient.
        for (xs, xt) in x_star.iter().zip(&x_true) {
            let sg = sign(*xs);
            constants.sigma_star_sq += 2.0 * lambda * curvature * (xs - xt) * sg + lambda * lambda * sg * sg;
        }
        Self::finish(Family::Lasso { x_true, design_radius, noise, lambda }, set, x_star, constants)
    }

    /// Soft-margin SVM in dimension `n` with margin scale `theta`. The
    /// population reference is averaged over `pool_size` samples of stream `pool_seed`.
    pub fn soft_svm(n: usize, theta: f64, pool_size: usize, pool_seed: u64, set: FeasibleSet) -> Result<Self> {
        check_dim(set.dimension(), n)?;
        nonnegative("theta", theta)?;
        if pool_size < 2 {
            return Err(Error::input("soft_svm pool_size must be at least 2"));
        }
        if set.max_norm2() > 1.0 + 1e-12 {
            return Err(Error::input("soft_svm feasible set must lie inside the unit l2-ball"));
        }
        let (reference, reference_stderr) = soft_svm_reference(n, theta, pool_size, pool_seed);
        let neg: Vec<f64> = reference.iter().map(|v| -v).collect();
        let x_star = set.linear_minimizer(&neg)?;
        let (s, mu_ps) = match &set {
            FeasibleSet::L2Ball { radius, .. } => (2.0, norm2(&reference) / (2.0 * radius)),
            _ => (1.0, 0.0),
        };
        let constants = ProblemConstants {
            m_p: 1.0,
            l: f64::INFINITY,
            mu_p: 0.0,
            sigma_star_sq: 1.0,
            s,
            mu_ps,
            lambda_sq: 1.0,
        };
        let family = Family::SoftSvm {
            theta,
            pool_size,
            pool_seed,
            reference,
            reference_stderr,
        };
        Self::finish(family, set, x_star, constants)
    }

    /// Norm-power problem on the unit ℓ₂-ball; `x* = 0`, `f(x) − f* = ‖x‖ˢ`.
    pub fn norm_power(n: usize, s: f64, sigma: f64) -> Result<Self> {
        if !(s >= 1.0 && s.is_finite()) {
            return Err(Error::input(format!("norm_power exponent must be >= 1, got {s}")));
        }
        nonnegative("sigma", sigma)?;
        let set = FeasibleSet::l2_ball_origin(n, 1.0)?;
        let nf = n as f64;
        let l = if s >= 2.0 { s * (s - 1.0) } else { f64::INFINITY };
        let constants = ProblemConstants {
            // Root-mean-square bound on the stochastic gradient over the unit ball.
            m_p: s * (1.0 + sigma * nf.sqrt()),
            l,
            mu_p: if s == 2.0 { 2.0 } else { 0.0 },
            sigma_star_sq: s * s * sigma * sigma * nf,
            s,
            mu_ps: 1.0,
            lambda_sq: s * s * sigma * sigma,
        };
        Self::finish(Family::NormPower { s, sigma }, set, vec![0.0; n], constants)
    }

    /// Diagonal quadratic finite sum on the whole space.
    pub fn finite_sum_quadratic(hess: Vec<Vec<f64>>, centers: Vec<Vec<f64>>) -> Result<Self> {
        if hess.is_empty() || hess.len() != centers.len() {
            return Err(Error::input("finite sum needs matching, nonempty hess and centers"));
        }
        let n = hess[0].len();
        for (h, c) in hess.iter().zip(&centers) {
            check_dim(n, h.len())?;
            check_dim(n, c.len())?;
            if h.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || !c.iter().all(|v| v.is_finite()) {
                return Err(Error::input("finite sum curvatures must be finite and nonnegative"));
            }
        }
        let terms = hess.len() as f64;
        let mut weight = vec![0.0; n];
        let mut moment = vec![0.0; n];
        for (h, c) in hess.iter().zip(&centers) {
            for j in 0..n {
                weight[j] += h[j];
                moment[j] += h[j] * c[j];
            }
        }
        if weight.iter().any(|w| *w <= 0.0) {
            return Err(Error::Degenerate("every coordinate needs positive total curvature".into()));
        }
        let x_star: Vec<f64> = moment.iter().zip(&weight).map(|(m, w)| m / w).collect();
        let l = hess.iter().flatten().copied().fold(0.0, f64::max);
        let mu = weight.iter().copied().fold(f64::INFINITY, f64::min) / terms;
        let mut sigma_star_sq = 0.0;
        let mut worst: f64 = 0.0;
        for (h, c) in hess.iter().zip(&centers) {
            let g: f64 = (0..n).map(|j| (h[j] * (x_star[j] - c[j])).powi(2)).sum();
            sigma_star_sq += g / terms;
            worst = worst.max(g);
        }
        let constants = ProblemConstants {
            m_p: f64::INFINITY,
            l,
            mu_p: mu,
            sigma_star_sq,
            s: 2.0,
            mu_ps: mu / 2.0,
            lambda_sq: worst,
        };
        let set = FeasibleSet::unconstrained(n)?;
        Self::finish(Family::FiniteSumQuadratic { hess, centers }, set, x_star, constants)
    }

    /// Random diagonal finite sum with condition number about `kappa`.
    ///
    /// Coordinate 0 has curvature `U(0.5, 1.5)/kappa` per term, the last
    /// coordinate has curvature 1, the rest `U(0.2, 1)`. With `interpolating`
    /// every term shares one minimizer, so `σ*² = 0`.
    pub fn random_finite_sum(terms: usize, n: usize, kappa: f64, seed: u64, interpolating: bool) -> Result<Self> {
        if terms == 0 || n < 2 {
            return Err(Error::input("random finite sum needs terms >= 1 and n >= 2"));
        }
        if !(kappa >= 1.0) {
            return Err(Error::input("kappa must be >= 1"));
        }
        let mut rng = SampleStream::new(seed).rng();
        let shared: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut hess = Vec::with_capacity(terms);
        let mut centers = Vec::with_capacity(terms);
        for _ in 0..terms {
            let mut h: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
            h[0] = rng.random_range(0.5..1.5) / kappa;
            h[n - 1] = 1.0;
            let c = if interpolating {
                shared.clone()
            } else {
                (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            };
            hess.push(h);
            centers.push(c);
        }
        Self::finite_sum_quadratic(hess, centers)
    }

    fn finish(family: Family, set: FeasibleSet, x_star: Vec<f64>, constants: ProblemConstants) -> Result<Self> {
        let mut p = ProblemInstance {
            family,
            set,
            norm: NormTag::L2,
            x_star,
            fc_star: 0.0,
            constants,
        };
        p.fc_star = p.population_core(&p.x_star);
        Ok(p)
    }

    /// Same problem measured in another norm (affects reporting only).
    pub fn with_norm(mut self, norm: NormTag) -> Self {
        self.norm = norm;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn norm(&self) -> NormTag {
        self.norm
    }

    pub fn dimension(&self) -> usize {
        self.set.dimension()
    }

    pub fn optimum(&self) -> &[f64] {
        &self.x_star
    }

    pub fn constants(&self) -> ProblemConstants {
        self.constants
    }

    pub fn is_smooth(&self) -> bool {
        self.constants.l.is_finite()
    }

    /// Number of terms for finite-sum problems.
    pub fn num_terms(&self) -> Option<usize> {
        match &self.family {
            Family::FiniteSumQuadratic { hess, .. } => Some(hess.len()),
            _ => None,
        }
    }

    /// Draws the sample at `stream.counter` and advances the stream in place.
    pub fn sample(&self, stream: &mut SampleStream) -> Sample {
        let mut rng = stream.rng();
        stream.counter += 1;
        self.sample_with(&mut rng)
    }

    fn sample_with(&self, rng: &mut ChaCha8Rng) -> Sample {
        match &self.family {
            Family::GaussianMean { mean, sigma, truncation } => Sample::Point(
                mean.iter()
                    .map(|m| m + sigma * truncated_normal(rng, *truncation))
                    .collect(),
            ),
            Family::RidgeRegression { x_true, design_radius, noise }
            | Family::Lasso { x_true, design_radius, noise, .. } => {
                let a: Vec<f64> = unit_sphere(rng, x_true.len()).into_iter().map(|v| v * design_radius).collect();
                let e = if *noise > 0.0 { rng.random_range(-noise..*noise) } else { 0.0 };
                Sample::Labeled { y: dot(&a, x_true) + e, a }
            }
            Family::SoftSvm { theta, .. } => {
                let (y, a) = soft_svm_draw(rng, self.dimension(), *theta);
                Sample::Labeled { y, a }
            }
            Family::NormPower { sigma, .. } => Sample::Point(
                (0..self.dimension())
                    .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            ),
            Family::FiniteSumQuadratic { hess, .. } => Sample::Term(rng.random_range(0..hess.len())),
        }
    }

    fn check_sample(&self, xi: &Sample) -> Result<()> {
        let ok = match (&self.family, xi) {
            (Family::GaussianMean { .. } | Family::NormPower { .. }, Sample::Point(v)) => v.len() == self.dimension(),
            (
                Family::RidgeRegression { .. } | Family::Lasso { .. } | Family::SoftSvm { .. },
                Sample::Labeled { a, .. },
            ) => a.len() == self.dimension(),
            (Family::FiniteSumQuadratic { hess, .. }, Sample::Term(t)) => *t < hess.len(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("sample {xi:?} does not belong to family {}", self.name())))
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dimension(), x.len())?;
        if !contains(&self.set, x, DEFAULT_TOL)? {
            return Err(Error::Precondition(format!("{}: point lies outside the feasible set", self.name())));
        }
        Ok(())
    }

    /// `f(x, ξ)` without membership checks.
    pub(crate) fn value_raw(&self, x: &[f64], xi: &Sample) -> f64 {
        match (&self.family, xi) {
            (Family::GaussianMean { .. }, Sample::Point(v)) => crate::linalg::dist2(v, x).powi(2),
            (Family::RidgeRegression { .. }, Sample::Labeled { y, a }) => (y - dot(a, x)).powi(2),
            (Family::Lasso { lambda, .. }, Sample::Labeled { y, a }) => (y - dot(a, x)).powi(2) + lambda * norm1(x),
            (Family::SoftSvm { .. }, Sample::Labeled { y, a }) => (1.0 - y * dot(x, a)).max(0.0),
            (Family::NormPower { s, .. }, Sample::Point(v)) => norm2(x).powf(*s) - s * dot(v, x),
            (Family::FiniteSumQuadratic { hess, centers }, Sample::Term(t)) => {
                0.5 * x
                    .iter()
                    .zip(&hess[*t])
                    .zip(&centers[*t])
                    .map(|((xj, h), c)| h * (xj - c) * (xj - c))
                    .sum::<f64>()
            }
            _ => panic!("sample {xi:?} does not belong to family {}", self.name()),
        }
    }

    /// Writes a subgradient of `f(·, ξ)` at `x` into `out`.
    pub(crate) fn grad_into(&self, x: &[f64], xi: &Sample, out: &mut [f64]) {
        match (&self.family, xi) {
            (Family::GaussianMean { .. }, Sample::Point(v)) => {
                for ((o, xj), vj) in out.iter_mut().zip(x).zip(v) {
                    *o = 2.0 * (xj - vj);
                }
            }
            (Family::RidgeRegression { .. }, Sample::Labeled { y, a }) => {
                let r = y - dot(a, x);
                for (o, aj) in out.iter_mut().zip(a) {
                    *o = -2.0 * r * aj;
                }
            }
            (Family::Lasso { lambda, .. }, Sample::Labeled { y, a }) => {
                let r = y - dot(a, x);
                for ((o, aj), xj) in out.iter_mut().zip(a).zip(x) {
                    *o = -2.0 * r * aj + lambda * sign(*xj);
                }
            }
            (Family::SoftSvm { .. }, Sample::Labeled { y, a }) => {
                // Zero at the kink.
                let active = 1.0 - y * dot(x, a) > 0.0;
                for (o, aj) in out.iter_mut().zip(a) {
                    *o = if active { -y * aj } else { 0.0 };
                }
            }
            (Family::NormPower { s, .. }, Sample::Point(v)) => {
                let coef = norm_power_coef(x, *s);
                for ((o, xj), vj) in out.iter_mut().zip(x).zip(v) {
                    *o = coef * xj - s * vj;
                }
            }
            (Family::FiniteSumQuadratic { hess, centers }, Sample::Term(t)) => {
                for (((o, xj), h), c) in out.iter_mut().zip(x).zip(&hess[*t]).zip(&centers[*t]) {
                    *o = h * (xj - c);
                }
            }
            _ => panic!("sample {xi:?} does not belong to family {}", self.name()),
        }
    }

    /// Population objective up to an additive constant.
    fn population_core(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::GaussianMean { mean, .. } => crate::linalg::dist2(x, mean).powi(2),
            Family::RidgeRegression { x_true, design_radius, .. } => {
                design_radius * design_radius / x.len() as f64 * crate::linalg::dist2(x, x_true).powi(2)
            }
            Family::Lasso { x_true, design_radius, lambda, .. } => {
                design_radius * design_radius / x.len() as f64 * crate::linalg::dist2(x, x_true).powi(2)
                    + lambda * norm1(x)
            }
            Family::SoftSvm { reference, .. } => -dot(reference, x),
            Family::NormPower { s, .. } => norm2(x).powf(*s),
            Family::FiniteSumQuadratic { hess, centers } => {
                let terms = hess.len() as f64;
                hess.iter()
                    .zip(centers)
                    .map(|(h, c)| {
                        0.5 * x.iter().zip(h).zip(c).map(|((xj, hj), cj)| hj * (xj - cj).powi(2)).sum::<f64>()
                    })
                    .sum::<f64>()
                    / terms
            }
        }
    }

    /// Gradient (or the canonical subgradient) of the population objective.
    pub fn population_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension(), x.len())?;
        let n = x.len() as f64;
        Ok(match &self.family {
            Family::GaussianMean { mean, .. } => x.iter().zip(mean).map(|(a, m)| 2.0 * (a - m)).collect(),
            Family::RidgeRegression { x_true, design_radius, .. } => {
                let c = 2.0 * design_radius * design_radius / n;
                x.iter().zip(x_true).map(|(a, t)| c * (a - t)).collect()
            }
            Family::Lasso { x_true, design_radius, lambda, .. } => {
                let c = 2.0 * design_radius * design_radius / n;
                x.iter().zip(x_true).map(|(a, t)| c * (a - t) + lambda * sign(*a)).collect()
            }
            Family::SoftSvm { reference, .. } => reference.iter().map(|v| -v).collect(),
            Family::NormPower { s, .. } => {
                let coef = norm_power_coef(x, *s);
                x.iter().map(|v| coef * v).collect()
            }
            Family::FiniteSumQuadratic { hess, centers } => {
                let terms = hess.len() as f64;
                let mut g = vec![0.0; x.len()];
                for (h, c) in hess.iter().zip(centers) {
                    for j in 0..x.len() {
                        g[j] += h[j] * (x[j] - c[j]) / terms;
                    }
                }
                g
            }
        })
    }
}

/// Coefficient `c` with `∇‖x‖ˢ = c·x`; zero at the origin.
fn norm_power_coef(x: &[f64], s: f64) -> f64 {
    let r = norm2(x);
    if r == 0.0 {
        0.0
    } else {
        s * r.powf(s - 2.0)
    }
}

fn regression_constants(
    x_true: &[f64],
    x_star: &[f64],
    rho: f64,
    noise: f64,
    lambda: f64,
    set: &FeasibleSet,
) -> ProblemConstants {
    let n = x_true.len() as f64;
    let d = crate::linalg::dist2(x_true, x_star);
    let residual_bound = rho * (norm2(x_true) + set.max_norm2()) + noise;
    let m_p = 2.0 * rho * residual_bound + lambda * n.sqrt();
    let curvature = 2.0 * rho * rho / n;
    ProblemConstants {
        m_p,
        l: 2.0 * rho * rho,
        mu_p: curvature,
        sigma_star_sq: 4.0 * rho * rho * (rho * rho * d * d / n + noise * noise / 3.0),
        s: 2.0,
        mu_ps: curvature / 2.0,
        lambda_sq: if m_p.is_finite() { m_p * m_p } else { 4.0 * rho * rho * noise * noise },
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must be nonnegative and finite, got {v}")))
    }
}

fn truncated_normal(rng: &mut ChaCha8Rng, truncation: Option<f64>) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        match truncation {
            Some(c) if z.abs() > c => continue,
            _ => return z,
        }
    }
}

/// Variance of a standard normal truncated to `[−c, c]`.
pub(crate) fn truncated_variance_factor(truncation: Option<f64>) -> f64 {
    match truncation {
        None => 1.0,
        Some(c) => {
            let phi = (-0.5 * c * c).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let mass = statrs::function::erf::erf(c / std::f64::consts::SQRT_2);
            1.0 - 2.0 * c * phi / mass
        }
    }
}

fn unit_sphere(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = norm2(&v);
        if r > 0.0 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Label probability `P(y = +1 | a)` for the SoftSVM model.
pub(crate) fn soft_svm_plus_probability(theta: f64, a1: f64) -> f64 {
    let z = theta * a1;
    let plus = (-(1.0 - z).max(0.0)).exp();
    let minus = (-(1.0 + z).max(0.0)).exp();
    plus / (plus + minus)
}

fn soft_svm_draw(rng: &mut ChaCha8Rng, n: usize, theta: f64) -> (f64, Vec<f64>) {
    let a = unit_sphere(rng, n);
    let y = if rng.random::<f64>() < soft_svm_plus_probability(theta, a[0]) {
        1.0
    } else {
        -1.0
    };
    (y, a)
}

/// Mean of `y·a` over a frozen pool, and the Euclidean norm of its standard error.
fn soft_svm_reference(n: usize, theta: f64, pool: usize, seed: u64) -> (Vec<f64>, f64) {
    const CHUNK: usize = 1 << 14;
    let chunks = pool.div_ceil(CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; n];
            let mut sq = vec![0.0; n];
            let start = c * CHUNK;
            for k in start..(start + CHUNK).min(pool) {
                let mut rng = SampleStream { base_seed: seed, counter: k as u64 }.rng();
                let (y, a) = soft_svm_draw(&mut rng, n, theta);
                for j in 0..n {
                    sum[j] += y * a[j];
                    sq[j] += a[j] * a[j];
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for (s, q) in &partial {
        for j in 0..n {
            sum[j] += s[j];
            sq[j] += q[j];
        }
    }
    let m = pool as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let var: f64 = (0..n).map(|j| (sq[j] / m - mean[j] * mean[j]).max(0.0) / m).sum();
    (mean, var.sqrt())
}

/// Draws one sample and returns it with the advanced stream.
pub fn draw_sample(p: &ProblemInstance, stream: SampleStream) -> (Sample, SampleStream) {
    let mut s = stream;
    let xi = p.sample(&mut s);
    (xi, s)
}

pub fn loss_value(p: &ProblemInstance, x: &[f64], xi: &Sample) -> Result<f64> {
    p.check_point(x)?;
    p.check_sample(xi)?;
    Ok(p.value_raw(x, xi))
}

/// A subgradient of `f(·, ξ)` at `x`. Only dimensions and sample type are
/// checked, so finite-difference probes may step slightly outside `Q`.
pub fn loss_subgradient(p: &ProblemInstance, x: &[f64], xi: &Sample) -> Result<Vec<f64>> {
    check_dim(p.dimension(), x.len())?;
    p.check_sample(xi)?;
    let mut g = vec![0.0; x.len()];
    p.grad_into(x, xi, &mut g);
    Ok(g)
}

/// `f(x) − f(x*)` from the closed-form population objective, clamped at 0.
pub fn population_gap(p: &ProblemInstance, x: &[f64]) -> Result<f64> {
    p.check_point(x)?;
    Ok((p.population_core(x) - p.fc_star).max(0.0))
}

pub fn problem_constants(p: &ProblemInstance) -> ProblemConstants {
    p.constants
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist2;
    use rand::Rng;
    use proptest::prelude::*;

    fn scalar_gaussian(mean: f64) -> ProblemInstance {
        ProblemInstance::gaussian_mean(vec![mean], 1.0, None, FeasibleSet::unconstrained(1).unwrap()).unwrap()
    }

    fn point(v: &[f64]) -> Sample {
        Sample::Point(v.to_vec())
    }

    #[test]
    fn draws_are_deterministic_per_counter() {
        let p = ProblemInstance::norm_power(3, 2.0, 1.0).unwrap();
        let s = SampleStream { base_seed: 42, counter: 17 };
        assert_eq!(draw_sample(&p, s).0, draw_sample(&p, s).0);
        let (_, next) = draw_sample(&p, s);
        assert_eq!(next.counter, 18);
        assert_ne!(draw_sample(&p, next).0, draw_sample(&p, s).0);
    }

    #[test]
    fn gaussian_mean_monte_carlo_mean() {
        let p = scalar_gaussian(0.0);
        let mut s = SampleStream::new(7);
        let n = 100_000;
        let mut total = 0.0;
        for _ in 0..n {
            if let Sample::Point(v) = p.sample(&mut s) {
                total += v[0];
            }
        }
        assert!((total / n as f64).abs() < 0.02);
    }

    #[test]
    fn norm_power_sample_covariance_is_identity() {
        let p = ProblemInstance::norm_power(2, 2.0, 1.0).unwrap();
        let mut s = SampleStream::new(11);
        let n = 100_000;
        let mut c = [[0.0; 2]; 2];
        for _ in 0..n {
            if let Sample::Point(v) = p.sample(&mut s) {
                for i in 0..2 {
                    for j in 0..2 {
                        c[i][j] += v[i] * v[j] / n as f64;
                    }
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c[i][j] - target).abs() < 0.02, "c[{i}][{j}] = {}", c[i][j]);
            }
        }
    }

    #[test]
    fn loss_examples() {
        let g = scalar_gaussian(0.0);
        assert_eq!(loss_value(&g, &[1.0], &point(&[3.0])).unwrap(), 4.0);
        assert_eq!(loss_subgradient(&g, &[1.0], &point(&[3.0])).unwrap(), vec![-4.0]);

        let np = ProblemInstance::norm_power(2, 2.0, 1.0).unwrap();
        let v = loss_value(&np, &[0.5, 0.0], &point(&[1.0, 0.0])).unwrap();
        assert!((v + 0.75).abs() < 1e-15);
        assert_eq!(loss_subgradient(&np, &[0.5, 0.0], &point(&[1.0, 0.0])).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn hinge_inactive_and_kink() {
        let set = FeasibleSet::l2_ball_origin(2, 1.0).unwrap();
        let p = ProblemInstance::soft_svm(2, 2.0, 1000, 0, set).unwrap();
        let xi = Sample::Labeled { y: 1.0, a: vec![4.0, 0.0] };
        assert_eq!(loss_value(&p, &[0.5, 0.0], &xi).unwrap(), 0.0);
        assert_eq!(loss_subgradient(&p, &[0.5, 0.0], &xi).unwrap(), vec![0.0, 0.0]);
        let kink = Sample::Labeled { y: 1.0, a: vec![2.0, 0.0] };
        assert_eq!(loss_subgradient(&p, &[0.5, 0.0], &kink).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn loss_outside_set_is_precondition_error() {
        let np = ProblemInstance::norm_power(2, 2.0, 1.0).unwrap();
        assert!(matches!(
            loss_value(&np, &[2.0, 0.0], &point(&[0.0, 0.0])),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            loss_value(&np, &[0.0, 0.0], &Sample::Term(0)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn gap_examples() {
        let np = ProblemInstance::norm_power(2, 2.0, 1.0).unwrap();
        assert!((population_gap(&np, &[0.3, 0.4]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(population_gap(&np, &[0.0, 0.0]).unwrap(), 0.0);
        let g = scalar_gaussian(2.0);
        assert_eq!(population_gap(&g, &[3.0]).unwrap(), 1.0);
        assert_eq!(population_gap(&g, &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn constants_examples() {
        assert_eq!(problem_constants(&scalar_gaussian(0.0)).mu_p, 2.0);
        let c = problem_constants(&ProblemInstance::norm_power(4, 3.0, 0.5).unwrap());
        assert_eq!(c.lambda_sq, 9.0 * 0.25);
        assert_eq!(c.mu_ps, 1.0);
        assert_eq!(c.s, 3.0);
        let fs = ProblemInstance::random_finite_sum(20, 4, 10.0, 3, true).unwrap();
        assert!(problem_constants(&fs).sigma_star_sq < 1e-24);
        assert!(population_gap(&fs, fs.optimum()).unwrap() == 0.0);
    }

    #[test]
    fn truncated_variance_matches_monte_carlo() {
        let p = ProblemInstance::gaussian_mean(vec![0.0], 1.0, Some(1.0), FeasibleSet::unconstrained(1).unwrap())
            .unwrap();
        let mut s = SampleStream::new(5);
        let n = 200_000;
        let mut m2 = 0.0;
        for _ in 0..n {
            if let Sample::Point(v) = p.sample(&mut s) {
                assert!(v[0].abs() <= 1.0);
                m2 += v[0] * v[0] / n as f64;
            }
        }
        assert!((m2 - truncated_variance_factor(Some(1.0))).abs() < 0.005, "{m2}");
    }

    /// Independent 1-D quadrature of `E[y·a₁]`: `a₁` has density proportional to
    /// `(1 − t²)^{(n−3)/2}` on the unit sphere in dimension `n`.
    fn soft_svm_reference_quadrature(n: usize, theta: f64) -> f64 {
        let m = 200_000;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..m {
            let t = -1.0 + (i as f64 + 0.5) * 2.0 / m as f64;
            let w = (1.0 - t * t).powf((n as f64 - 3.0) / 2.0);
            num += w * t * (2.0 * soft_svm_plus_probability(theta, t) - 1.0);
            den += w;
        }
        num / den
    }

    #[test]
    fn soft_svm_reference_matches_quadrature() {
        let set = FeasibleSet::l2_ball_origin(10, 1.0).unwrap();
        let p = ProblemInstance::soft_svm(10, 2.0, 200_000, 9, set).unwrap();
        let Family::SoftSvm { reference, reference_stderr, .. } = p.family() else {
            unreachable!()
        };
        let exact = soft_svm_reference_quadrature(10, 2.0);
        assert!((reference[0] - exact).abs() < 4.0 * reference_stderr, "{} vs {exact}", reference[0]);
        assert!(reference[1..].iter().all(|v| v.abs() < 4.0 * reference_stderr));
        // x* sits on the boundary in the direction of the reference.
        assert!((norm2(p.optimum()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lasso_optimum_satisfies_first_order_condition() {
        let x_true = vec![0.8, -0.05, 0.3];
        let p = ProblemInstance::lasso(x_true, 1.0, 0.1, 0.05, FeasibleSet::unconstrained(3).unwrap()).unwrap();
        let x = p.optimum().to_vec();
        // Each coordinate either sits at 0 with |smooth gradient| ≤ λ, or has zero total gradient.
        let Family::Lasso { x_true, design_radius, lambda, .. } = p.family() else { unreachable!() };
        for j in 0..3 {
            let smooth = 2.0 * design_radius * design_radius / 3.0 * (x[j] - x_true[j]);
            if x[j] == 0.0 {
                assert!(smooth.abs() <= lambda + 1e-12);
            } else {
                assert!((smooth + lambda * x[j].signum()).abs() < 1e-12);
            }
        }
        assert_eq!(x[1], 0.0);
    }

    fn smooth_problems() -> Vec<ProblemInstance> {
        let ball = FeasibleSet::l2_ball_origin(3, 2.0).unwrap();
        vec![
            ProblemInstance::gaussian_mean(vec![0.3, -0.2, 0.1], 1.0, None, FeasibleSet::unconstrained(3).unwrap())
                .unwrap(),
            ProblemInstance::ridge(vec![0.5, 0.5, -1.0], 2.0, 0.3, ball).unwrap(),
            ProblemInstance::norm_power(3, 2.0, 1.0).unwrap(),
            ProblemInstance::norm_power(3, 3.0, 1.0).unwrap(),
            ProblemInstance::random_finite_sum(10, 3, 5.0, 1, false).unwrap(),
        ]
    }

    #[test]
    fn gradients_match_central_differences() {
        for p in smooth_problems() {
            let mut s = SampleStream::new(13);
            let mut rng = SampleStream::new(99).rng();
            for _ in 0..20 {
                let raw: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
                let x = project(p.feasible_set(), &raw).unwrap();
                let xi = p.sample(&mut s);
                let g = loss_subgradient(&p, &x, &xi).unwrap();
                let h = 1e-5;
                for j in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (p.value_raw(&xp, &xi) - p.value_raw(&xm, &xi)) / (2.0 * h);
                    let scale = g[j].abs().max(1.0);
                    assert!((fd - g[j]).abs() / scale <= 1e-6, "{}: fd {fd} vs {}", p.name(), g[j]);
                }
            }
        }
    }

    #[test]
    fn stochastic_gradients_are_unbiased() {
        let ball = FeasibleSet::l2_ball_origin(3, 1.0).unwrap();
        let mut problems = smooth_problems();
        problems.push(ProblemInstance::soft_svm(3, 2.0, 100_000, 4, ball).unwrap());
        for p in problems {
            let x = project(p.feasible_set(), &[0.2, -0.1, 0.3]).unwrap();
            let exact = p.population_gradient(&x).unwrap();
            let mut s = SampleStream::new(21);
            let n = 100_000;
            let mut mean = [0.0; 3];
            let mut sq = [0.0; 3];
            let mut g = vec![0.0; 3];
            for _ in 0..n {
                let xi = p.sample(&mut s);
                p.grad_into(&x, &xi, &mut g);
                for j in 0..3 {
                    mean[j] += g[j] / n as f64;
                    sq[j] += g[j] * g[j] / n as f64;
                }
            }
            for j in 0..3 {
                let se = ((sq[j] - mean[j] * mean[j]).max(0.0) / n as f64).sqrt();
                // The SoftSVM reference carries its own pool error.
                let slack = if p.name() == "soft_svm" { 0.01 } else { 0.0 };
                assert!(
                    (mean[j] - exact[j]).abs() <= 3.0 * se + slack + 1e-12,
                    "{} coord {j}: {} vs {} (se {se})",
                    p.name(),
                    mean[j],
                    exact[j]
                );
            }
        }
    }

    #[test]
    fn declared_lipschitz_constants_hold_on_bounded_families() {
        let ball = FeasibleSet::l2_ball_origin(3, 1.0).unwrap();
        let problems = vec![
            ProblemInstance::ridge(vec![0.5, 0.5, -1.0], 2.0, 0.3, ball.clone()).unwrap(),
            ProblemInstance::lasso(vec![0.5, 0.0, -0.2], 1.5, 0.3, 0.1, ball.clone()).unwrap(),
            ProblemInstance::soft_svm(3, 2.0, 1000, 1, ball.clone()).unwrap(),
            ProblemInstance::gaussian_mean(vec![0.2, 0.0, 0.1], 0.5, Some(2.0), ball.clone()).unwrap(),
        ];
        let mut rng = SampleStream::new(5).rng();
        for p in problems {
            let m = p.constants().m_p;
            let mut s = SampleStream::new(8);
            let mut worst: f64 = 0.0;
            for _ in 0..2000 {
                let a: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let b: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (a, b) = (project(&ball, &a).unwrap(), project(&ball, &b).unwrap());
                let xi = p.sample(&mut s);
                let d = dist2(&a, &b);
                if d > 0.0 {
                    worst = worst.max((p.value_raw(&a, &xi) - p.value_raw(&b, &xi)).abs() / d);
                }
            }
            assert!(worst <= m * (1.0 + 1e-6), "{}: {worst} > {m}", p.name());
        }
    }

    proptest! {
        #[test]
        fn norm_power_growth(s in 1.0f64..4.0, v in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let p = ProblemInstance::norm_power(3, s, 1.0).unwrap();
            let x = project(p.feasible_set(), &v).unwrap();
            let gap = population_gap(&p, &x).unwrap();
            let c = p.constants();
            prop_assert!(gap >= c.mu_ps * norm2(&x).powf(c.s) * (1.0 - 1e-12));
        }

        #[test]
        fn gap_is_nonnegative(v in proptest::collection::vec(-3.0f64..3.0, 3)) {
            for p in smooth_problems() {
                let x = project(p.feasible_set(), &v).unwrap();
                prop_assert!(population_gap(&p, &x).unwrap() >= 0.0);
            }
        }
    }
}
