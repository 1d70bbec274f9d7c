//! Median optimality gap of averaged SGD as the horizon grows.
//!
//! Convex nonsmooth (soft-margin SVM, constant horizon step) should fall like
//! N^-1/2; strongly convex (Gaussian mean, 1/(mu k) step) like N^-1.

use sastra::harness::{
    median_gap_curve, Algorithm, FamilyConfig, ProblemConfig, ScheduleChoice, SetConfig, SolverConfig, SolverExperiment,
};
use sastra::sa::{TargetAccuracy, Window};

fn main() -> sastra::Result<()> {
    let ns = [100, 1_000, 10_000, 100_000];
    let target = TargetAccuracy::new(0.1, 0.1)?;

    let svm = ProblemConfig {
        family: FamilyConfig::SoftSvm { theta: 2.0, pool: 200_000 },
        dim: 10,
        set: SetConfig::L2Ball { radius: 1.0 },
        seed: 7,
    };
    let mut sgd = SolverConfig::new(Algorithm::Sgd);
    sgd.schedule = ScheduleChoice::ConstantHorizon;
    sgd.window = Some(Window::Full);
    let exp = SolverExperiment::new(svm.build()?, sgd)?;
    let (pts, fit) = median_gap_curve(&exp, &ns, &target, 30, 0)?;
    println!("soft svm, constant horizon step");
    for (n, g) in &pts {
        println!("  N = {n:>6}  median gap {g:.3e}");
    }
    println!("  fitted slope {:.3}", fit.slope);

    let gauss = ProblemConfig {
        family: FamilyConfig::GaussianMean { mean: 0.5, sigma: 1.0, truncation: None },
        dim: 2,
        set: SetConfig::Unconstrained,
        seed: 0,
    };
    let mut sgd = SolverConfig::new(Algorithm::Sgd);
    sgd.schedule = ScheduleChoice::InverseStrong;
    let exp = SolverExperiment::new(gauss.build()?, sgd)?;
    let (pts, fit) = median_gap_curve(&exp, &ns, &target, 30, 0)?;
    println!("gaussian mean, 1/(mu k) step, tail-half average");
    for (n, g) in &pts {
        println!("  N = {n:>6}  median gap {g:.3e}");
    }
    println!("  fitted slope {:.3}", fit.slope);
    Ok(())
}
