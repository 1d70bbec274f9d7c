//! Sample average approximation: certified ERM solves and the Tikhonov pipeline.

use sastra::geometry::FeasibleSet;
use sastra::linalg::dist2;
use sastra::problems::{population_gap, ProblemInstance, SampleStream};
use sastra::sa::TargetAccuracy;
use sastra::saa::{build_empirical, norm_power_erm_closed_form, regularized_pipeline, solve_erm, Composite};

fn main() -> sastra::Result<()> {
    for s in [1.0, 1.5, 2.0, 3.0] {
        let p = ProblemInstance::norm_power(5, s, 0.5)?;
        let e = build_empirical(&p, 100, SampleStream::new(2), Composite::None)?;
        let sol = solve_erm(&e, 1e-12, 1_000_000)?;
        let exact = norm_power_erm_closed_form(&e)?;
        println!(
            "norm power s = {s}: certificate {:?} {:.1e}, distance to closed form {:.1e}",
            sol.kind,
            sol.certificate,
            dist2(&sol.point, &exact)
        );
    }

    let p = ProblemInstance::gaussian_mean(vec![0.5], 1.0, Some(3.0), FeasibleSet::l2_ball_origin(1, 1.0)?)?;
    let target = TargetAccuracy::new(0.05, 0.1)?;
    let out = regularized_pipeline(&p, &target, None, SampleStream::new(9), &[0.0])?;
    println!(
        "tikhonov pipeline: mu {:.3e}, delta {:.3e}, N = {}, population gap {:.3e}",
        out.mu,
        out.delta,
        out.samples,
        population_gap(&p, &out.point)?
    );
    Ok(())
}
