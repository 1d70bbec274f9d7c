use crate::error::{Error, Result};
use crate::linalg::norm2_sq;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `γ = R/(M√N)` for a run of known length `N`.
    ConstantHorizon { r: f64, m: f64, n: u64 },
    /// `γ_k = 1/(μk)`.
    InverseStrong { mu: f64 },
    /// `γ_k = R/(M√k)`.
    Decreasing { r: f64, m: f64 },
    /// `γ_k = R/√(Σ_{j≤k} ‖g_j‖²)`, or `gamma_max` while every gradient so far was zero.
    AdaGrad { r: f64, gamma_max: f64 },
}

/// Stepsize policy. Only AdaGrad carries state (its squared-norm accumulator).
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    kind: ScheduleKind,
    accum: f64,
}

impl StepSchedule {
    pub fn new(kind: ScheduleKind) -> Result<Self> {
        let ok = match kind {
            ScheduleKind::ConstantHorizon { r, m, n } => pos(r) && pos(m) && n >= 1,
            ScheduleKind::InverseStrong { mu } => pos(mu),
            ScheduleKind::Decreasing { r, m } => pos(r) && pos(m),
            ScheduleKind::AdaGrad { r, gamma_max } => pos(r) && pos(gamma_max),
        };
        if !ok {
            return Err(Error::input(format!("invalid schedule parameters: {kind:?}")));
        }
        Ok(StepSchedule { kind, accum: 0.0 })
    }

    pub fn constant_horizon(r: f64, m: f64, n: u64) -> Result<Self> {
        Self::new(ScheduleKind::ConstantHorizon { r, m, n })
    }

    pub fn inverse_strong(mu: f64) -> Result<Self> {
        Self::new(ScheduleKind::InverseStrong { mu })
    }

    pub fn decreasing(r: f64, m: f64) -> Result<Self> {
        Self::new(ScheduleKind::Decreasing { r, m })
    }

    pub fn adagrad(r: f64, gamma_max: f64) -> Result<Self> {
        Self::new(ScheduleKind::AdaGrad { r, gamma_max })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// True for schedules that target strongly convex problems.
    pub fn is_strongly_convex(&self) -> bool {
        matches!(self.kind, ScheduleKind::InverseStrong { .. })
    }

    /// Stepsize for iteration `k ≥ 1`. AdaGrad folds `last_gradient` into its
    /// accumulator first, so call this exactly once per iteration.
    pub fn step(&mut self, k: u64, last_gradient: &[f64]) -> Result<f64> {
        if k == 0 {
            return Err(Error::input("iteration index starts at 1"));
        }
        let kf = k as f64;
        Ok(match self.kind {
            ScheduleKind::ConstantHorizon { r, m, n } => r / (m * (n as f64).sqrt()),
            ScheduleKind::InverseStrong { mu } => 1.0 / (mu * kf),
            ScheduleKind::Decreasing { r, m } => r / (m * kf.sqrt()),
            ScheduleKind::AdaGrad { r, gamma_max } => {
                self.accum += norm2_sq(last_gradient);
                if self.accum > 0.0 {
                    r / self.accum.sqrt()
                } else {
                    gamma_max
                }
            }
        })
    }
}

fn pos(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Free-function form of [`StepSchedule::step`].
pub fn step_size(schedule: &mut StepSchedule, k: u64, last_gradient: &[f64]) -> Result<f64> {
    schedule.step(k, last_gradient)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_horizon() {
        let mut s = StepSchedule::constant_horizon(1.0, 2.0, 100).unwrap();
        assert!((s.step(1, &[]).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(s.step(1, &[]).unwrap(), s.step(57, &[]).unwrap());
    }

    #[test]
    fn inverse_strong() {
        let mut s = StepSchedule::inverse_strong(2.0).unwrap();
        assert_eq!(s.step(4, &[]).unwrap(), 0.125);
    }

    #[test]
    fn decreasing() {
        let mut s = StepSchedule::decreasing(2.0, 4.0).unwrap();
        assert_eq!(s.step(4, &[]).unwrap(), 0.25);
    }

    #[test]
    fn adagrad_unit_gradients() {
        let mut s = StepSchedule::adagrad(1.0, 10.0).unwrap();
        let mut last = 0.0;
        for k in 1..=4 {
            last = s.step(k, &[0.6, 0.8]).unwrap();
        }
        assert!((last - 0.5).abs() < 1e-15);
    }

    #[test]
    fn adagrad_zero_history_uses_cap_and_accumulates() {
        let mut s = StepSchedule::adagrad(1.0, 3.0).unwrap();
        assert_eq!(s.step(1, &[0.0, 0.0]).unwrap(), 3.0);
        assert_eq!(s.step(2, &[0.0, 0.0]).unwrap(), 3.0);
        let mut prev = f64::INFINITY;
        for k in 3..20 {
            let g = s.step(k, &[k as f64 * 0.1]).unwrap();
            assert!(g > 0.0 && g <= prev);
            prev = g;
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(StepSchedule::constant_horizon(1.0, 0.0, 10).is_err());
        assert!(StepSchedule::constant_horizon(1.0, 1.0, 0).is_err());
        assert!(StepSchedule::inverse_strong(-1.0).is_err());
        assert!(StepSchedule::inverse_strong(1.0).unwrap().step(0, &[]).is_err());
    }
}
