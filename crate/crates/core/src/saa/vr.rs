//! Variance-reduced (SVRG-style) finite-sum solver.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::norm2_sq;
use crate::problems::SampleStream;

use super::empirical::EmpiricalObjective;
use super::prox::{composite_prox_step, Composite};

/// Reference point `x̄` with the stored full gradient `∇f̄(x̄)` of the data term.
#[derive(Debug, Clone, PartialEq)]
pub struct VrState {
    reference: Vec<f64>,
    full_grad: Vec<f64>,
    pub epoch_len: u64,
    pub step: f64,
    stale: bool,
}

impl VrState {
    pub fn new(e: &EmpiricalObjective<'_>, reference: &[f64], epoch_len: u64, step: f64) -> Result<Self> {
        check_dim(e.dimension(), reference.len())?;
        if epoch_len == 0 || !(step > 0.0) {
            return Err(Error::input("epoch length and step must be positive"));
        }
        let full_grad = e.data_value_grad(reference).1;
        Ok(VrState {
            reference: reference.to_vec(),
            full_grad,
            epoch_len,
            step,
            stale: false,
        })
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn full_gradient(&self) -> &[f64] {
        &self.full_grad
    }

    /// Moves the reference to `x` and recomputes the full gradient there.
    pub fn refresh(&mut self, e: &EmpiricalObjective<'_>, x: &[f64]) {
        self.reference = x.to_vec();
        self.full_grad = e.data_value_grad(x).1;
        self.stale = false;
    }

    /// Marks the stored gradient as out of date (for example after the sample set changed).
    pub fn invalidate(&mut self) {
        self.stale = true;
    }
}

/// `∇f_t(x) − ∇f_t(x̄) + ∇f̄(x̄)` for term `t` (0-based).
pub fn vr_gradient(state: &VrState, e: &EmpiricalObjective<'_>, x: &[f64], t: usize) -> Result<Vec<f64>> {
    if state.stale {
        return Err(Error::StaleReference);
    }
    check_dim(e.dimension(), x.len())?;
    if t >= e.len() {
        return Err(Error::input(format!("term index {t} out of range 0..{}", e.len())));
    }
    let mut out = vec![0.0; x.len()];
    let mut scratch = vec![0.0; x.len()];
    vr_into(state, e, x, t, &mut out, &mut scratch);
    Ok(out)
}

fn vr_into(state: &VrState, e: &EmpiricalObjective<'_>, x: &[f64], t: usize, out: &mut [f64], scratch: &mut [f64]) {
    e.term_grad(x, t, out);
    e.term_grad(&state.reference, t, scratch);
    for j in 0..out.len() {
        out[j] += state.full_grad[j] - scratch[j];
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrOptions {
    /// Inner step is `step_factor / L`.
    pub step_factor: f64,
    /// Inner steps per epoch as a multiple of `N`.
    pub epoch_factor: f64,
    /// Record the per-epoch variance proxy (one extra pass per epoch).
    pub track_variance: bool,
}

impl Default for VrOptions {
    fn default() -> Self {
        VrOptions {
            step_factor: 0.5,
            epoch_factor: 1.0,
            track_variance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VrOutcome {
    pub point: Vec<f64>,
    /// Completed inner epochs.
    pub epochs: u64,
    pub certificate: f64,
    pub certified: bool,
    /// `(1/N) Σ_t ‖∇f_t(x) − ∇f_t(x̄)‖²` at the end of each epoch, a bound on
    /// the variance of the control-variate gradient.
    pub variance_proxy: Vec<f64>,
}

pub fn vr_solve(e: &EmpiricalObjective<'_>, target_delta: f64, budget: u64, stream: SampleStream) -> Result<VrOutcome> {
    vr_solve_with(e, target_delta, budget, stream, VrOptions::default())
}

/// Epoch loop: refresh the reference, test the strong-convexity certificate,
/// then take `epoch_factor·N` uniformly sampled control-variate prox steps.
/// `budget` caps the number of epochs.
pub fn vr_solve_with(
    e: &EmpiricalObjective<'_>,
    target_delta: f64,
    budget: u64,
    stream: SampleStream,
    opts: VrOptions,
) -> Result<VrOutcome> {
    let l = e.smoothness();
    if !l.is_finite() {
        return Err(Error::NotApplicable(format!("{} terms are not smooth", e.problem().name())));
    }
    let mu = e.strong_convexity();
    if !(mu > 0.0) {
        return Err(Error::Precondition("vr_solve needs a strongly convex objective".into()));
    }
    let set = e.problem().feasible_set();
    let comp: &Composite = e.composite();
    let n = e.len();
    let epoch_len = ((opts.epoch_factor * n as f64).round() as u64).max(1);
    let x0 = set.center_point();
    let mut state = VrState::new(e, &x0, epoch_len, opts.step_factor / l)?;
    let mut x = x0;
    let mut stream = stream;
    let mut variance_proxy = Vec::new();
    let mut g = vec![0.0; x.len()];
    let mut scratch = vec![0.0; x.len()];
    let mut cert = f64::INFINITY;
    for epoch in 0..=budget {
        state.refresh(e, &x);
        cert = certificate(e, &state, l, mu)?;
        if cert <= target_delta {
            return Ok(VrOutcome {
                point: x,
                epochs: epoch,
                certificate: cert,
                certified: true,
                variance_proxy,
            });
        }
        if epoch == budget {
            break;
        }
        for _ in 0..state.epoch_len {
            let t = stream.rng().random_range(0..n);
            stream.counter += 1;
            vr_into(&state, e, &x, t, &mut g, &mut scratch);
            x = composite_prox_step(&x, &g, state.step, comp, set)?;
        }
        if opts.track_variance {
            let mut acc = 0.0;
            for t in 0..n {
                e.term_grad(&x, t, &mut g);
                e.term_grad(&state.reference, t, &mut scratch);
                acc += g.iter().zip(&scratch).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            }
            variance_proxy.push(acc / n as f64);
        }
    }
    log::warn!("vr_solve: {budget} epochs exhausted (certificate {cert:e}, target {target_delta:e})");
    Ok(VrOutcome {
        point: x,
        epochs: budget,
        certificate: cert,
        certified: false,
        variance_proxy,
    })
}

/// Strong-convexity certificate at the reference. Unconstrained problems
/// without a composite use `‖∇f̄‖²/(2μ)` directly; otherwise one exact
/// prox-gradient step supplies a subgradient of the full objective.
fn certificate(e: &EmpiricalObjective<'_>, state: &VrState, l: f64, mu: f64) -> Result<f64> {
    let set = e.problem().feasible_set();
    let x = &state.reference;
    if matches!(e.composite(), Composite::None) && !set.is_bounded() {
        return Ok(norm2_sq(&state.full_grad) / (2.0 * mu));
    }
    let xn = composite_prox_step(x, &state.full_grad, 1.0 / l, e.composite(), set)?;
    let gn = e.data_value_grad(&xn).1;
    let v: Vec<f64> = (0..x.len()).map(|j| l * (x[j] - xn[j]) - state.full_grad[j] + gn[j]).collect();
    Ok(norm2_sq(&v) / (2.0 * mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FeasibleSet;
    use crate::linalg::dist2;
    use crate::problems::ProblemInstance;
    use crate::saa::empirical::{build_empirical, empirical_value_grad};
    use crate::saa::solve::solve_erm;
    use proptest::prelude::*;

    fn finite_sum(terms: usize, kappa: f64, seed: u64, interp: bool) -> ProblemInstance {
        ProblemInstance::random_finite_sum(terms, 4, kappa, seed, interp).unwrap()
    }

    #[test]
    fn reference_point_returns_full_gradient() {
        let p = finite_sum(10, 5.0, 1, false);
        let e = build_empirical(&p, 10, SampleStream::new(2), Composite::None).unwrap();
        let x = [0.1, 0.2, -0.3, 0.4];
        let st = VrState::new(&e, &x, 10, 0.1).unwrap();
        for t in 0..10 {
            let g = vr_gradient(&st, &e, &x, t).unwrap();
            assert!(dist2(&g, st.full_gradient()) < 1e-15);
        }
    }

    #[test]
    fn interpolating_optimum_gives_zero() {
        let p = finite_sum(8, 5.0, 3, true);
        let e = build_empirical(&p, 8, SampleStream::new(2), Composite::None).unwrap();
        let xs = p.optimum().to_vec();
        let st = VrState::new(&e, &xs, 8, 0.1).unwrap();
        for t in 0..8 {
            assert!(crate::linalg::norm2(&vr_gradient(&st, &e, &xs, t).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn stale_reference_is_rejected() {
        let p = finite_sum(3, 2.0, 1, false);
        let e = build_empirical(&p, 3, SampleStream::new(2), Composite::None).unwrap();
        let mut st = VrState::new(&e, &[0.0; 4], 3, 0.1).unwrap();
        st.invalidate();
        assert!(matches!(vr_gradient(&st, &e, &[0.0; 4], 0), Err(Error::StaleReference)));
        st.refresh(&e, &[0.0; 4]);
        assert!(vr_gradient(&st, &e, &[0.0; 4], 0).is_ok());
    }

    #[test]
    fn single_term_reduces_to_gradient_descent() {
        let p = finite_sum(1, 3.0, 7, false);
        let e = build_empirical(&p, 1, SampleStream::new(1), Composite::None).unwrap();
        let out = vr_solve(&e, 1e-12, 1000, SampleStream::new(3)).unwrap();
        // Each epoch is one exact gradient step with step 1/(2L).
        let l = e.smoothness();
        let mut x = vec![0.0; 4];
        for _ in 0..out.epochs {
            let g = e.data_value_grad(&x).1;
            x = x.iter().zip(&g).map(|(a, b)| a - 0.5 / l * b).collect();
        }
        assert!(dist2(&x, &out.point) < 1e-12);
        assert!(out.certified);
    }

    #[test]
    fn quadratic_finite_sum_certifies_quickly() {
        let p = finite_sum(100, 10.0, 11, false);
        let e = build_empirical(&p, 100, SampleStream::new(4), Composite::None).unwrap();
        let exact = solve_erm(&e, 1e-20, 100_000).unwrap();
        let out = vr_solve(&e, 1e-8, 200, SampleStream::new(5)).unwrap();
        assert!(out.certified && out.epochs <= 200, "{out:?}");
        // Certificate bounds the gap, hence the distance: ‖x − x̂‖² ≤ 2δ/μ.
        let mu = e.strong_convexity();
        assert!(dist2(&out.point, &exact.point).powi(2) <= 2.0 * 1e-8 / mu * 1.0001 + 1e-20);
    }

    #[test]
    fn variance_proxy_mostly_decreases() {
        let p = finite_sum(100, 10.0, 12, false);
        let e = build_empirical(&p, 100, SampleStream::new(4), Composite::None).unwrap();
        let opts = VrOptions { track_variance: true, ..VrOptions::default() };
        let out = vr_solve_with(&e, 1e-14, 200, SampleStream::new(5), opts).unwrap();
        let v = &out.variance_proxy;
        assert!(v.len() >= 5);
        let down = v.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(down as f64 >= 0.9 * (v.len() - 1) as f64, "{v:?}");
    }

    #[test]
    fn nonsmooth_terms_rejected() {
        let ball = FeasibleSet::l2_ball_origin(2, 1.0).unwrap();
        let p = ProblemInstance::soft_svm(2, 2.0, 100, 0, ball).unwrap();
        let e = build_empirical(&p, 5, SampleStream::new(1), Composite::HalfSqL2 { mu: 1.0, center: vec![0.0; 2] })
            .unwrap();
        assert!(matches!(vr_solve(&e, 1e-6, 10, SampleStream::new(0)), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn regularized_constrained_run_certifies() {
        let ball = FeasibleSet::l2_ball_origin(3, 0.5).unwrap();
        let p = ProblemInstance::ridge(vec![1.0, -1.0, 0.5], 1.0, 0.1, ball).unwrap();
        let comp = Composite::HalfSqL2 { mu: 0.1, center: vec![0.0; 3] };
        let e = build_empirical(&p, 50, SampleStream::new(2), comp).unwrap();
        let out = vr_solve(&e, 1e-10, 500, SampleStream::new(1)).unwrap();
        assert!(out.certified);
        let exact = solve_erm(&e, 1e-16, 1_000_000).unwrap();
        assert!(dist2(&out.point, &exact.point) < 1e-4);
    }

    proptest! {
        #[test]
        fn average_over_terms_is_full_gradient(seed in any::<u64>(), x in proptest::collection::vec(-2.0f64..2.0, 4), r in proptest::collection::vec(-2.0f64..2.0, 4)) {
            let p = finite_sum(3, 4.0, seed, false);
            let e = build_empirical(&p, 3, SampleStream::new(seed), Composite::None).unwrap();
            let st = VrState::new(&e, &r, 3, 0.1).unwrap();
            let mut mean = [0.0; 4];
            for t in 0..3 {
                let g = vr_gradient(&st, &e, &x, t).unwrap();
                for j in 0..4 {
                    mean[j] += g[j] / 3.0;
                }
            }
            let full = empirical_value_grad(&e, &x).unwrap().1;
            for j in 0..4 {
                prop_assert!((mean[j] - full[j]).abs() <= 1e-12);
            }
        }
    }
}
