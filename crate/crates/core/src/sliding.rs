//! Accelerated gradient sliding for `f̄ = g + h` on the whole space.
//!
//! `g` is the cheap, well-conditioned part (smoothness `L_g`, possibly
//! nonconvex); `h` is convex with the larger constant `L_h`. Each outer step
//! calls `∇g` twice and solves a proximal model of `h` approximately, so the
//! two gradient counts separate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{all_finite, dist2, norm2, norm2_sq};

/// Deterministic gradient oracle.
pub trait GradientOracle {
    fn dimension(&self) -> usize;
    fn gradient(&mut self, x: &[f64]) -> Vec<f64>;
}

/// `½ xᵀHx + cᵀx` with a dense symmetric `H` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticOracle {
    dim: usize,
    hess: Vec<f64>,
    linear: Vec<f64>,
}

impl QuadraticOracle {
    pub fn new(dim: usize, hess: Vec<f64>, linear: Vec<f64>) -> Result<Self> {
        check_dim(dim * dim, hess.len())?;
        check_dim(dim, linear.len())?;
        for i in 0..dim {
            for j in 0..i {
                if hess[i * dim + j] != hess[j * dim + i] {
                    return Err(Error::input("quadratic oracle needs a symmetric matrix"));
                }
            }
        }
        Ok(QuadraticOracle { dim, hess, linear })
    }

    pub fn diagonal(diag: &[f64], linear: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        let mut hess = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            hess[i * n + i] = *d;
        }
        Self::new(n, hess, linear)
    }

    pub fn zero(dim: usize) -> Self {
        QuadraticOracle {
            dim,
            hess: vec![0.0; dim * dim],
            linear: vec![0.0; dim],
        }
    }

    pub fn hessian(&self) -> &[f64] {
        &self.hess
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let hx = self.apply(x);
        0.5 * crate::linalg::dot(x, &hx) + crate::linalg::dot(&self.linear, x)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| crate::linalg::dot(&self.hess[i * self.dim..(i + 1) * self.dim], x))
            .collect()
    }
}

impl GradientOracle for QuadraticOracle {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        let mut g = self.apply(x);
        for (a, c) in g.iter_mut().zip(&self.linear) {
            *a += c;
        }
        g
    }
}

/// Method used on the inner model `Aᵗ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMethod {
    /// Nesterov's method for the `2L_g`-strongly convex, `(2L_g + L_h)`-smooth model.
    Accelerated,
    /// Plain gradient descent with step `1/(2L_g + L_h)`.
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingParams {
    pub l_g: f64,
    /// Zero when there is no `h`.
    pub l_h: f64,
    pub mu: f64,
    pub tau: f64,
    pub eta: f64,
    pub inner: InnerMethod,
    /// Cap on inner gradient steps per outer iteration.
    pub inner_budget: u64,
    pub record_iterates: bool,
}

impl SlidingParams {
    pub fn new(l_g: f64, l_h: f64, mu: f64) -> Result<Self> {
        if !(l_g > 0.0 && l_g.is_finite()) {
            return Err(Error::input(format!("L_g must be positive, got {l_g}")));
        }
        if !(l_h >= 0.0 && l_h.is_finite()) {
            return Err(Error::input(format!("L_h must be nonnegative, got {l_h}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Precondition(format!("sliding needs mu > 0, got {mu}")));
        }
        if mu > l_g {
            log::warn!("sliding: mu = {mu} exceeds L_g = {l_g}; eta takes its 1/(2mu) branch");
        }
        Ok(SlidingParams {
            l_g,
            l_h,
            mu,
            tau: (mu.sqrt() / (2.0 * l_g.sqrt())).min(1.0),
            eta: (1.0 / (2.0 * mu)).min(1.0 / (2.0 * (mu * l_g).sqrt())),
            inner: InnerMethod::Accelerated,
            inner_budget: 100_000,
            record_iterates: false,
        })
    }

    pub fn with_inner(mut self, inner: InnerMethod) -> Self {
        self.inner = inner;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_iterates = true;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallLedger {
    pub grad_g_calls: u64,
    pub grad_h_calls: u64,
    pub outer_iterations: u64,
}

impl CallLedger {
    /// `#∇h / #∇g`.
    pub fn ratio(&self) -> f64 {
        self.grad_h_calls as f64 / self.grad_g_calls as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingOutput {
    pub point: Vec<f64>,
    pub ledger: CallLedger,
    /// `‖∇f̄(point)‖²/(2μ)`.
    pub certificate: f64,
    pub certified: bool,
    /// `x_fᵗ` for `t = 1, 2, …` when recording.
    pub iterates: Vec<Vec<f64>>,
}

/// The inner model `Aᵗ(x) = g(x̃) + ⟨∇g(x̃), x − x̃⟩ + L_g‖x − x̃‖² + h(x)`.
pub struct InnerModel<'a> {
    pub anchor: &'a [f64],
    pub grad_g_anchor: &'a [f64],
    pub l_g: f64,
}

impl InnerModel<'_> {
    fn gradient(&self, x: &[f64], grad_h: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|j| self.grad_g_anchor[j] + 2.0 * self.l_g * (x[j] - self.anchor[j]) + grad_h[j])
            .collect()
    }
}

/// Approximately minimizes `Aᵗ` until `‖∇Aᵗ(y)‖² ≤ (L_g²/3)·ℓ²`, where `ℓ` is a
/// certified lower bound on `‖x̃ − argmin Aᵗ‖`: the larger of
/// `‖∇Aᵗ(x̃)‖/(2L_g + L_h)` and `‖x̃ − y‖ − ‖∇Aᵗ(y)‖/(2L_g)`.
///
/// Returns the point and the number of `∇h` calls made. With `h` absent the
/// minimizer `x̃ − ∇g(x̃)/(2L_g)` is returned directly.
pub fn inner_solve(model: &InnerModel<'_>, h: Option<&mut (dyn GradientOracle + '_)>, params: &SlidingParams) -> Result<(Vec<f64>, u64)> {
    let x0 = model.anchor;
    let Some(h) = h else {
        let y = (0..x0.len())
            .map(|j| x0[j] - model.grad_g_anchor[j] / (2.0 * params.l_g))
            .collect();
        return Ok((y, 0));
    };
    let mut calls = 1;
    let mut gh = h.gradient(x0);
    let g0 = model.gradient(x0, &gh);
    let mu_a = 2.0 * params.l_g;
    let l_a = mu_a + params.l_h;
    let lb0 = norm2(&g0) / l_a;
    let momentum = match params.inner {
        InnerMethod::Accelerated => {
            let k = (l_a / mu_a).sqrt();
            (k - 1.0) / (k + 1.0)
        }
        InnerMethod::GradientDescent => 0.0,
    };
    let mut y = x0.to_vec();
    let mut z_prev = x0.to_vec();
    let mut gy = g0;
    for step in 0..=params.inner_budget {
        let gn = norm2(&gy);
        let lb = lb0.max(dist2(x0, &y) - gn / mu_a);
        // Below `floor` the model gradient is rounding noise and cannot shrink further.
        let floor = 16.0 * f64::EPSILON * (norm2(model.grad_g_anchor) + l_a * (norm2(&y) + norm2(x0)) + norm2(&gh));
        if gn * gn <= params.l_g * params.l_g / 3.0 * lb * lb || gn <= floor {
            return Ok((y, calls));
        }
        if step == params.inner_budget {
            return Err(Error::BudgetExhausted(format!(
                "inner_solve: {} steps without meeting the criterion (|grad A| = {gn:e}, lower bound {lb:e})",
                params.inner_budget
            )));
        }
        let z: Vec<f64> = y.iter().zip(&gy).map(|(a, b)| a - b / l_a).collect();
        y = (0..z.len()).map(|j| z[j] + momentum * (z[j] - z_prev[j])).collect();
        z_prev = z;
        if !all_finite(&y) {
            return Err(Error::NonFinite {
                iteration: step + 1,
                detail: "inner_solve iterate".into(),
            });
        }
        gh = h.gradient(&y);
        gy = model.gradient(&y, &gh);
        calls += 1;
    }
    unreachable!()
}

/// Runs the sliding scheme from `x0` until `‖∇f̄(x_f)‖²/(2μ) ≤ target` or
/// `budget` outer iterations. Pass `h = None` for `h ≡ 0`.
pub fn sliding_run(
    g: &mut dyn GradientOracle,
    mut h: Option<&mut dyn GradientOracle>,
    params: &SlidingParams,
    x0: &[f64],
    target: f64,
    budget: u64,
) -> Result<SlidingOutput> {
    let n = g.dimension();
    check_dim(n, x0.len())?;
    if let Some(h) = h.as_deref() {
        check_dim(n, h.dimension())?;
        if params.l_g > params.l_h {
            return Err(Error::Precondition(format!(
                "sliding expects L_g <= L_h, got {} > {}",
                params.l_g, params.l_h
            )));
        }
    }
    let mut ledger = CallLedger::default();
    let mut x = x0.to_vec();
    let mut x_f = x0.to_vec();
    let mut iterates = Vec::new();
    let mut cert = f64::INFINITY;
    let (tau, eta, mu) = (params.tau, params.eta, params.mu);
    while ledger.outer_iterations < budget {
        ledger.outer_iterations += 1;
        let xt: Vec<f64> = (0..n).map(|j| tau * x[j] + (1.0 - tau) * x_f[j]).collect();
        let gt = g.gradient(&xt);
        ledger.grad_g_calls += 1;
        let model = InnerModel {
            anchor: &xt,
            grad_g_anchor: &gt,
            l_g: params.l_g,
        };
        let (next, h_calls) = inner_solve(&model, h.as_deref_mut(), params)
            .map_err(|e| e.context(format!("sliding outer iteration {}", ledger.outer_iterations)))?;
        ledger.grad_h_calls += h_calls;
        x_f = next;
        let mut grad = g.gradient(&x_f);
        ledger.grad_g_calls += 1;
        if let Some(h) = h.as_deref_mut() {
            let gh = h.gradient(&x_f);
            ledger.grad_h_calls += 1;
            for (a, b) in grad.iter_mut().zip(&gh) {
                *a += b;
            }
        }
        if params.record_iterates {
            iterates.push(x_f.clone());
        }
        if !all_finite(&grad) {
            return Err(Error::NonFinite {
                iteration: ledger.outer_iterations,
                detail: "sliding gradient".into(),
            });
        }
        cert = norm2_sq(&grad) / (2.0 * mu);
        if cert <= target {
            return Ok(SlidingOutput {
                point: x_f,
                ledger,
                certificate: cert,
                certified: true,
                iterates,
            });
        }
        x = (0..n).map(|j| x[j] + eta * mu * (x_f[j] - x[j]) - eta * grad[j]).collect();
    }
    log::warn!("sliding_run: {budget} outer iterations exhausted (certificate {cert:e}, target {target:e})");
    Ok(SlidingOutput {
        point: x_f,
        ledger,
        certificate: cert,
        certified: false,
        iterates,
    })
}

/// The accelerated method that sliding reduces to when `h ≡ 0`:
/// `x̃ = τx + (1−τ)x_f`, `x_f⁺ = x̃ − ∇g(x̃)/(2L_g)`,
/// `x⁺ = x + ημ(x_f⁺ − x) − η∇g(x_f⁺)`. Returns the `x_f` sequence.
pub fn accelerated_reference(g: &mut dyn GradientOracle, params: &SlidingParams, x0: &[f64], target: f64, budget: u64) -> Vec<Vec<f64>> {
    let n = x0.len();
    let (tau, eta, mu, l) = (params.tau, params.eta, params.mu, params.l_g);
    let mut x = x0.to_vec();
    let mut xf = x0.to_vec();
    let mut out = Vec::new();
    for _ in 0..budget {
        let xt: Vec<f64> = (0..n).map(|j| tau * x[j] + (1.0 - tau) * xf[j]).collect();
        let gt = g.gradient(&xt);
        xf = (0..n).map(|j| xt[j] - gt[j] / (2.0 * l)).collect();
        let gf = g.gradient(&xf);
        out.push(xf.clone());
        if norm2_sq(&gf) / (2.0 * mu) <= target {
            break;
        }
        x = (0..n).map(|j| x[j] + eta * mu * (xf[j] - x[j]) - eta * gf[j]).collect();
    }
    out
}

/// Finite-difference Lipschitz probe of `∇g` around `center`: returns the
/// largest observed `‖∇g(x) − ∇g(y)‖/‖x − y‖` over `pairs` random pairs in a
/// box of half-width `radius`. Convexity is never checked.
pub fn probe_smoothness(g: &mut dyn GradientOracle, center: &[f64], radius: f64, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x: Vec<f64> = center.iter().map(|c| c + radius * rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = center.iter().map(|c| c + radius * rng.random_range(-1.0..1.0)).collect();
        let d = dist2(&x, &y);
        if d > 0.0 {
            worst = worst.max(dist2(&g.gradient(&x), &g.gradient(&y)) / d);
        }
    }
    worst
}

/// Diagonal test instance: `g` has eigenvalues log-spaced on `[μ, L_g]`,
/// `h` is zero on the first half of the coordinates and log-spaced on
/// `[10⁻³L_h, L_h]` on the second half, both with standard normal linear terms.
pub fn split_quadratic_instance(n: usize, l_g: f64, l_h: f64, mu: f64, seed: u64) -> Result<(QuadraticOracle, QuadraticOracle)> {
    if n < 2 {
        return Err(Error::input("split instance needs n >= 2"));
    }
    let geom = |lo: f64, hi: f64, m: usize| -> Vec<f64> {
        if m == 1 {
            return vec![hi];
        }
        (0..m).map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64)).collect()
    };
    let dg = geom(mu, l_g, n);
    let mut dh = vec![0.0; n];
    let half = n / 2;
    dh[half..].copy_from_slice(&geom(1e-3 * l_h, l_h, n - half));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = |m: usize| -> Vec<f64> { (0..m).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect() };
    let bg = normal(n);
    let bh = normal(n);
    Ok((QuadraticOracle::diagonal(&dg, bg)?, QuadraticOracle::diagonal(&dh, bh)?))
}
