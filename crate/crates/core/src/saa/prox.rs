use crate::error::{check_dim, Error, Result};
use crate::geometry::{project, FeasibleSet};
use crate::linalg::{norm1, sign, soft_threshold};

/// Deterministic regularizer added to an empirical objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Composite {
    None,
    /// `(μ/2)‖x − center‖₂²`.
    HalfSqL2 { mu: f64, center: Vec<f64> },
    /// `λ‖x‖₁`.
    L1 { lambda: f64 },
}

impl Composite {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Composite::None => 0.0,
            Composite::HalfSqL2 { mu, center } => 0.5 * mu * crate::linalg::dist2(x, center).powi(2),
            Composite::L1 { lambda } => lambda * norm1(x),
        }
    }

    /// Subgradient, with `0` chosen at the kinks of `‖·‖₁`.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Composite::None => vec![0.0; x.len()],
            Composite::HalfSqL2 { mu, center } => x.iter().zip(center).map(|(a, c)| mu * (a - c)).collect(),
            Composite::L1 { lambda } => x.iter().map(|a| lambda * sign(*a)).collect(),
        }
    }

    /// Strong-convexity modulus contributed by the regularizer.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            Composite::HalfSqL2 { mu, .. } => *mu,
            _ => 0.0,
        }
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Composite::None => Ok(()),
            Composite::HalfSqL2 { mu, center } => {
                check_dim(dim, center.len())?;
                if !(*mu >= 0.0 && mu.is_finite()) {
                    return Err(Error::input(format!("regularizer mu must be nonnegative, got {mu}")));
                }
                Ok(())
            }
            Composite::L1 { lambda } => {
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::input(format!("l1 weight must be nonnegative, got {lambda}")));
                }
                Ok(())
            }
        }
    }
}

/// `argmin_{z∈Q} ⟨g, z − x⟩ + ‖z − x‖²/(2γ) + composite(z)`.
///
/// The quadratic regularizer folds into one isotropic quadratic, so projecting
/// its minimizer is exact on every set. Soft-thresholding followed by
/// projection is exact on the whole space and on origin-centred balls; other
/// pairings are rejected.
pub fn composite_prox_step(x: &[f64], g: &[f64], gamma: f64, composite: &Composite, set: &FeasibleSet) -> Result<Vec<f64>> {
    check_dim(set.dimension(), x.len())?;
    check_dim(set.dimension(), g.len())?;
    if !(gamma > 0.0) {
        return Err(Error::input(format!("prox stepsize must be positive, got {gamma}")));
    }
    match composite {
        Composite::None => {
            let w: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - gamma * b).collect();
            project(set, &w)
        }
        Composite::HalfSqL2 { mu, center } => {
            check_dim(set.dimension(), center.len())?;
            let inv = 1.0 / gamma;
            let w: Vec<f64> = x
                .iter()
                .zip(g)
                .zip(center)
                .map(|((a, b), c)| (a * inv - b + mu * c) / (inv + mu))
                .collect();
            project(set, &w)
        }
        Composite::L1 { lambda } => {
            let centred = match set {
                FeasibleSet::Unconstrained { .. } => true,
                FeasibleSet::L2Ball { center, .. } | FeasibleSet::L1Ball { center, .. } => {
                    center.iter().all(|c| *c == 0.0)
                }
                FeasibleSet::Simplex { .. } => false,
            };
            if !centred {
                return Err(Error::Unsupported(format!(
                    "l1 composite has no closed-form prox on {}",
                    describe(set)
                )));
            }
            let w: Vec<f64> = x
                .iter()
                .zip(g)
                .map(|(a, b)| soft_threshold(a - gamma * b, gamma * lambda))
                .collect();
            project(set, &w)
        }
    }
}

fn describe(set: &FeasibleSet) -> String {
    match set {
        FeasibleSet::Simplex { .. } => "the simplex".into(),
        other => format!("an off-centre {}", other.kind_name()),
    }
}
