//! Feasible sets, Euclidean projections and the entropic mirror step.
//!
//! Every operation is a pure function of its inputs. Projections onto the
//! ℓ₁-ball and the probability simplex use the sort-based threshold search
//! (O(n log n)); the simplex mirror step is computed in shifted log-space so
//! that large `γ‖g‖` neither overflows nor silently zeroes the whole vector.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist1, dist2, norm2, sign};

/// Default membership tolerance used by preconditions and invariants.
pub const DEFAULT_TOL: f64 = 1e-10;

/// The norm `‖·‖_p` in which constants and diameters are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormTag {
    L1,
    L2,
}

impl NormTag {
    pub fn from_p(p: u32) -> Result<Self> {
        match p {
            1 => Ok(NormTag::L1),
            2 => Ok(NormTag::L2),
            other => Err(Error::input(format!("norm p must be 1 or 2, got {other}"))),
        }
    }

    pub fn p(self) -> u32 {
        match self {
            NormTag::L1 => 1,
            NormTag::L2 => 2,
        }
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            NormTag::L1 => dist1(a, b),
            NormTag::L2 => dist2(a, b),
        }
    }
}

/// Constraint geometry `Q`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Unconstrained { dim: usize },
    L2Ball { center: Vec<f64>, radius: f64 },
    L1Ball { center: Vec<f64>, radius: f64 },
    /// The probability simplex `{x ≥ 0, Σx = 1}`.
    Simplex { dim: usize },
}

impl FeasibleSet {
    pub fn unconstrained(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("dimension must be at least 1"));
        }
        Ok(FeasibleSet::Unconstrained { dim })
    }

    pub fn l2_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::check_ball(&center, radius)?;
        Ok(FeasibleSet::L2Ball { center, radius })
    }

    /// ℓ₂-ball of the given radius centred at the origin.
    pub fn l2_ball_origin(dim: usize, radius: f64) -> Result<Self> {
        Self::l2_ball(vec![0.0; dim], radius)
    }

    pub fn l1_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::check_ball(&center, radius)?;
        Ok(FeasibleSet::L1Ball { center, radius })
    }

    pub fn l1_ball_origin(dim: usize, radius: f64) -> Result<Self> {
        Self::l1_ball(vec![0.0; dim], radius)
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("dimension must be at least 1"));
        }
        Ok(FeasibleSet::Simplex { dim })
    }

    fn check_ball(center: &[f64], radius: f64) -> Result<()> {
        if center.is_empty() {
            return Err(Error::input("dimension must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::input(format!("ball radius must be positive and finite, got {radius}")));
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::input("ball center must be finite"));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        match self {
            FeasibleSet::Unconstrained { dim } | FeasibleSet::Simplex { dim } => *dim,
            FeasibleSet::L2Ball { center, .. } | FeasibleSet::L1Ball { center, .. } => center.len(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, FeasibleSet::Unconstrained { .. })
    }

    /// Short identifier used in configs and reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            FeasibleSet::Unconstrained { .. } => "unconstrained",
            FeasibleSet::L2Ball { .. } => "l2_ball",
            FeasibleSet::L1Ball { .. } => "l1_ball",
            FeasibleSet::Simplex { .. } => "simplex",
        }
    }

    /// A canonical interior (or central) point: ball centre, simplex barycentre, or 0.
    pub fn center_point(&self) -> Vec<f64> {
        match self {
            FeasibleSet::Unconstrained { dim } => vec![0.0; *dim],
            FeasibleSet::Simplex { dim } => vec![1.0 / *dim as f64; *dim],
            FeasibleSet::L2Ball { center, .. } | FeasibleSet::L1Ball { center, .. } => center.clone(),
        }
    }

    /// `sup_{x ∈ Q} ‖x‖₂` (∞ when unbounded).
    pub fn max_norm2(&self) -> f64 {
        match self {
            FeasibleSet::Unconstrained { .. } => f64::INFINITY,
            FeasibleSet::Simplex { .. } => 1.0,
            FeasibleSet::L2Ball { center, radius } => norm2(center) + radius,
            FeasibleSet::L1Ball { center, radius } => {
                // A convex function attains its max over the cross-polytope at a vertex.
                let base: f64 = center.iter().map(|c| c * c).sum();
                center
                    .iter()
                    .map(|c| {
                        let hi = (c + radius).powi(2);
                        let lo = (c - radius).powi(2);
                        (base - c * c + hi.max(lo)).sqrt()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// `argmin_{x ∈ Q} ⟨v, x⟩`. Ties are broken toward the lowest coordinate index.
    pub fn linear_minimizer(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension(), v.len())?;
        match self {
            FeasibleSet::Unconstrained { .. } => Err(Error::Unbounded),
            FeasibleSet::L2Ball { center, radius } => {
                let nv = norm2(v);
                if nv == 0.0 {
                    return Ok(center.clone());
                }
                Ok(center.iter().zip(v).map(|(c, vi)| c - radius * vi / nv).collect())
            }
            FeasibleSet::L1Ball { center, radius } => {
                let j = argmax_by(v, |a| a.abs());
                let mut x = center.clone();
                x[j] -= radius * sign(v[j]);
                Ok(x)
            }
            FeasibleSet::Simplex { dim } => {
                let j = argmax_by(v, |a| -a);
                let mut x = vec![0.0; *dim];
                x[j] = 1.0;
                Ok(x)
            }
        }
    }
}

fn argmax_by(v: &[f64], key: impl Fn(f64) -> f64) -> usize {
    let mut best = 0;
    for (i, &vi) in v.iter().enumerate() {
        if key(vi) > key(v[best]) {
            best = i;
        }
    }
    best
}

/// Euclidean projection onto `set`. Points already inside a ball are returned unchanged.
pub fn project(set: &FeasibleSet, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(set.dimension(), x.len())?;
    Ok(match set {
        FeasibleSet::Unconstrained { .. } => x.to_vec(),
        FeasibleSet::L2Ball { center, radius } => {
            let d = dist2(x, center);
            if d <= *radius {
                x.to_vec()
            } else {
                let t = radius / d;
                x.iter().zip(center).map(|(xi, c)| c + t * (xi - c)).collect()
            }
        }
        FeasibleSet::L1Ball { center, radius } => {
            let y: Vec<f64> = x.iter().zip(center).map(|(xi, c)| xi - c).collect();
            if y.iter().map(|v| v.abs()).sum::<f64>() <= *radius {
                x.to_vec()
            } else {
                let abs: Vec<f64> = y.iter().map(|v| v.abs()).collect();
                let theta = simplex_threshold(&abs, *radius);
                y.iter()
                    .zip(center)
                    .map(|(yi, c)| c + sign(*yi) * (yi.abs() - theta).max(0.0))
                    .collect()
            }
        }
        FeasibleSet::Simplex { .. } => {
            let theta = simplex_threshold(x, 1.0);
            x.iter().map(|xi| (xi - theta).max(0.0)).collect()
        }
    })
}

/// Threshold `θ` such that `Σ max(v_i − θ, 0) = z` (sort-based search).
fn simplex_threshold(v: &[f64], z: f64) -> f64 {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - z) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta
}

/// True iff the Euclidean distance from `x` to the set is at most `tol`.
pub fn contains(set: &FeasibleSet, x: &[f64], tol: f64) -> Result<bool> {
    check_dim(set.dimension(), x.len())?;
    if let FeasibleSet::Simplex { .. } = set {
        if x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() == 1.0 {
            return Ok(true);
        }
    }
    let p = project(set, x)?;
    Ok(dist2(x, &p) <= tol)
}

/// One mirror-descent step with stepsize `gamma`.
///
/// Balls and the unconstrained set use the Euclidean prox, i.e. exactly
/// `project(set, x − γg)`. The simplex uses the entropic update
/// `x_i·exp(−γ g_i) / Σ_j x_j·exp(−γ g_j)`.
pub fn mirror_step(set: &FeasibleSet, x: &[f64], g: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_dim(set.dimension(), x.len())?;
    check_dim(set.dimension(), g.len())?;
    if !(gamma > 0.0) {
        return Err(Error::input(format!("stepsize must be positive, got {gamma}")));
    }
    if !contains(set, x, DEFAULT_TOL)? {
        return Err(Error::Precondition("mirror_step: x lies outside the feasible set".into()));
    }
    match set {
        FeasibleSet::Simplex { .. } => entropic_step(x, g, gamma),
        _ => {
            let moved: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - gamma * gi).collect();
            project(set, &moved)
        }
    }
}

fn entropic_step(x: &[f64], g: &[f64], gamma: f64) -> Result<Vec<f64>> {
    // Centring g first keeps uniform shifts exact instead of lost to cancellation.
    let g_min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let mut logw = Vec::with_capacity(x.len());
    for (i, (&xi, &gi)) in x.iter().zip(g).enumerate() {
        if xi <= 0.0 {
            if gi != 0.0 {
                return Err(Error::Degenerate(format!(
                    "simplex coordinate {i} is zero while its gradient is {gi}"
                )));
            }
            logw.push(f64::NEG_INFINITY);
        } else {
            logw.push(xi.ln() - gamma * (gi - g_min));
        }
    }
    let shift = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - shift).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.iter().map(|wi| wi / total).collect())
}

/// Exact diameter of a bounded set in the requested norm.
pub fn set_diameter(set: &FeasibleSet, norm: NormTag) -> Result<f64> {
    let n = set.dimension() as f64;
    match (set, norm) {
        (FeasibleSet::Unconstrained { .. }, _) => Err(Error::Unbounded),
        (FeasibleSet::L2Ball { radius, .. }, NormTag::L2) => Ok(2.0 * radius),
        // Antipodal points on the diagonal (±R/√n)·1.
        (FeasibleSet::L2Ball { radius, .. }, NormTag::L1) => Ok(2.0 * radius * n.sqrt()),
        (FeasibleSet::L1Ball { radius, .. }, _) => Ok(2.0 * radius),
        (FeasibleSet::Simplex { dim }, _) if *dim == 1 => Ok(0.0),
        (FeasibleSet::Simplex { .. }, NormTag::L1) => Ok(2.0),
        (FeasibleSet::Simplex { .. }, NormTag::L2) => Ok(std::f64::consts::SQRT_2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn l2_ball_projection_scales_radially() {
        let set = FeasibleSet::l2_ball_origin(2, 5.0).unwrap();
        let p = project(&set, &[6.0, 8.0]).unwrap();
        assert!(close(&p, &[3.0, 4.0], 1e-15));
    }

    #[test]
    fn simplex_projection_of_symmetric_point() {
        let set = FeasibleSet::simplex(3).unwrap();
        let p = project(&set, &[0.5, 0.5, 0.5]).unwrap();
        assert!(close(&p, &[1.0 / 3.0; 3], 1e-15));
    }

    /// Brute force over active sets: for each support S, θ = (Σ_S x − 1)/|S| and
    /// the candidate is feasible iff all kept coordinates stay positive.
    fn simplex_projection_brute(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << n) {
            let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let theta = (support.iter().map(|&i| x[i]).sum::<f64>() - 1.0) / support.len() as f64;
            let mut z = vec![0.0; n];
            let mut ok = true;
            for &i in &support {
                z[i] = x[i] - theta;
                if z[i] < -1e-12 {
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            let d = dist2(x, &z);
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, z));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn simplex_projection_two_dims_matches_brute_force() {
        let set = FeasibleSet::simplex(2).unwrap();
        let p = project(&set, &[2.0, 0.0]).unwrap();
        assert!(close(&p, &[1.0, 0.0], 1e-15));
        assert!(close(&p, &simplex_projection_brute(&[2.0, 0.0]), 1e-12));
    }

    #[test]
    fn projection_dimension_mismatch_is_an_error() {
        let set = FeasibleSet::simplex(3).unwrap();
        assert!(matches!(project(&set, &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn unconstrained_projection_is_identity() {
        let set = FeasibleSet::unconstrained(3).unwrap();
        assert_eq!(project(&set, &[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn entropic_step_exponential_weights() {
        let set = FeasibleSet::simplex(2).unwrap();
        let x = mirror_step(&set, &[0.5, 0.5], &[0.0, 3f64.ln()], 1.0).unwrap();
        assert!(close(&x, &[0.75, 0.25], 1e-15));
    }

    #[test]
    fn zero_gradient_leaves_point_unchanged() {
        let sets = [
            FeasibleSet::unconstrained(3).unwrap(),
            FeasibleSet::l2_ball_origin(3, 1.0).unwrap(),
            FeasibleSet::l1_ball_origin(3, 1.0).unwrap(),
            FeasibleSet::simplex(3).unwrap(),
        ];
        let x = [0.2, 0.3, 0.5];
        for set in &sets {
            let y = mirror_step(set, &x, &[0.0; 3], 0.7).unwrap();
            assert!(close(&y, &x, 1e-15), "{set:?}");
        }
    }

    #[test]
    fn entropic_step_is_shift_invariant() {
        let set = FeasibleSet::simplex(3).unwrap();
        let x = [0.2, 0.3, 0.5];
        for c in [-50.0, -1.0, 0.5, 1e3] {
            let y = mirror_step(&set, &x, &[c; 3], 2.0).unwrap();
            assert!(close(&y, &x, 1e-15), "c={c}");
        }
    }

    #[test]
    fn entropic_step_handles_huge_exponents() {
        let set = FeasibleSet::simplex(3).unwrap();
        let y = mirror_step(&set, &[0.2, 0.3, 0.5], &[1e6, -1e6, 0.0], 10.0).unwrap();
        assert!(y.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((y[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mirror_step_errors() {
        let set = FeasibleSet::simplex(2).unwrap();
        assert!(matches!(
            mirror_step(&set, &[0.6, 0.6], &[0.0, 1.0], 1.0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            mirror_step(&set, &[1.0, 0.0], &[0.0, 1.0], 1.0),
            Err(Error::Degenerate(_))
        ));
        // A zero coordinate with zero gradient there is fine.
        let y = mirror_step(&set, &[1.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert_eq!(y, vec![1.0, 0.0]);
    }

    #[test]
    fn diameters() {
        let ball = FeasibleSet::l2_ball_origin(4, 3.0).unwrap();
        assert_eq!(set_diameter(&ball, NormTag::L2).unwrap(), 6.0);
        let simplex = FeasibleSet::simplex(5).unwrap();
        assert_eq!(set_diameter(&simplex, NormTag::L1).unwrap(), 2.0);
        let l1 = FeasibleSet::l1_ball_origin(3, 1.0).unwrap();
        assert_eq!(set_diameter(&l1, NormTag::L2).unwrap(), 2.0);
        assert!(matches!(
            set_diameter(&FeasibleSet::unconstrained(2).unwrap(), NormTag::L2),
            Err(Error::Unbounded)
        ));
    }

    /// The ℓ₁-ball is the convex hull of ±R·e_j, so its ℓ₂ diameter is the max
    /// pairwise vertex distance.
    #[test]
    fn l1_ball_l2_diameter_matches_vertex_brute_force() {
        for n in 1..6 {
            let mut verts = Vec::new();
            for j in 0..n {
                for s in [-1.0, 1.0] {
                    let mut v = vec![0.0; n];
                    v[j] = s;
                    verts.push(v);
                }
            }
            let mut best: f64 = 0.0;
            for a in &verts {
                for b in &verts {
                    best = best.max(dist2(a, b));
                }
            }
            let set = FeasibleSet::l1_ball_origin(n, 1.0).unwrap();
            assert!((set_diameter(&set, NormTag::L2).unwrap() - best).abs() < 1e-15);
        }
    }

    #[test]
    fn membership_examples() {
        let ball = FeasibleSet::l2_ball_origin(2, 1.0).unwrap();
        assert!(contains(&ball, &[1.0, 0.0], 0.0).unwrap());
        assert!(!contains(&ball, &[1.1, 0.0], 0.05).unwrap());
        let simplex = FeasibleSet::simplex(3).unwrap();
        assert!(contains(&simplex, &[0.3, 0.7, 0.0], 0.0).unwrap());
    }

    #[test]
    fn bad_construction_rejected() {
        assert!(FeasibleSet::l2_ball_origin(2, 0.0).is_err());
        assert!(FeasibleSet::l1_ball_origin(2, -1.0).is_err());
        assert!(FeasibleSet::simplex(0).is_err());
        assert!(NormTag::from_p(3).is_err());
    }

    #[test]
    fn linear_minimizers() {
        let ball = FeasibleSet::l2_ball_origin(2, 2.0).unwrap();
        assert!(close(&ball.linear_minimizer(&[3.0, 4.0]).unwrap(), &[-1.2, -1.6], 1e-15));
        let l1 = FeasibleSet::l1_ball_origin(3, 1.0).unwrap();
        assert_eq!(l1.linear_minimizer(&[0.1, -2.0, 1.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        let s = FeasibleSet::simplex(3).unwrap();
        assert_eq!(s.linear_minimizer(&[0.1, -2.0, 1.0]).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    fn arb_set() -> impl Strategy<Value = FeasibleSet> {
        (1usize..6, 0.1f64..3.0, 0usize..4).prop_flat_map(|(n, r, kind)| {
            proptest::collection::vec(-2.0f64..2.0, n).prop_map(move |c| match kind {
                0 => FeasibleSet::l2_ball(c, r).unwrap(),
                1 => FeasibleSet::l1_ball(c, r).unwrap(),
                2 => FeasibleSet::simplex(c.len()).unwrap(),
                _ => FeasibleSet::unconstrained(c.len()).unwrap(),
            })
        })
    }

    fn arb_set_and_points() -> impl Strategy<Value = (FeasibleSet, Vec<f64>, Vec<f64>)> {
        arb_set().prop_flat_map(|s| {
            let n = s.dimension();
            (
                Just(s),
                proptest::collection::vec(-10.0f64..10.0, n),
                proptest::collection::vec(-10.0f64..10.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn projection_is_feasible_idempotent_nonexpansive((set, x, y) in arb_set_and_points()) {
            let px = project(&set, &x).unwrap();
            let py = project(&set, &y).unwrap();
            prop_assert!(contains(&set, &px, DEFAULT_TOL).unwrap());
            let ppx = project(&set, &px).unwrap();
            prop_assert!(dist2(&ppx, &px) <= 1e-12);
            prop_assert!(dist2(&px, &py) <= dist2(&x, &y) * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn projection_beats_other_feasible_points((set, x, z) in arb_set_and_points()) {
            let pz = project(&set, &z).unwrap();
            let px = project(&set, &x).unwrap();
            prop_assert!(dist2(&x, &px) <= dist2(&x, &pz) + 1e-10);
        }

        #[test]
        fn euclidean_mirror_step_equals_projected_step(
            (set, x, g) in arb_set_and_points(), gamma in 0.01f64..2.0
        ) {
            prop_assume!(!matches!(set, FeasibleSet::Simplex { .. }));
            let x = project(&set, &x).unwrap();
            let step = mirror_step(&set, &x, &g, gamma).unwrap();
            let moved: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - gamma * b).collect();
            prop_assert_eq!(step, project(&set, &moved).unwrap());
        }

        #[test]
        fn simplex_mirror_step_stays_on_simplex(
            w in proptest::collection::vec(0.01f64..1.0, 1..8),
            gs in proptest::collection::vec(-100.0f64..100.0, 8),
            gamma in 0.001f64..10.0,
        ) {
            let total: f64 = w.iter().sum();
            let x: Vec<f64> = w.iter().map(|v| v / total).collect();
            let set = FeasibleSet::simplex(x.len()).unwrap();
            let y = mirror_step(&set, &x, &gs[..x.len()], gamma).unwrap();
            prop_assert!(y.iter().all(|v| *v >= 0.0));
            prop_assert!((y.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn small_simplex_projection_matches_brute_force(x in proptest::collection::vec(-3.0f64..3.0, 1..6)) {
            let set = FeasibleSet::simplex(x.len()).unwrap();
            let p = project(&set, &x).unwrap();
            prop_assert!(close(&p, &simplex_projection_brute(&x), 1e-10));
        }
    }
}
