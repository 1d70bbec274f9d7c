//! Accelerated gradient descent on mini-batch gradients: iterations grow like eps^-1/2,
//! total samples like eps^-2.

use sastra::geometry::FeasibleSet;
use sastra::problems::{population_gap, ProblemInstance, SampleStream};
use sastra::sa::{batched_accelerated_run, TargetAccuracy};

fn main() -> sastra::Result<()> {
    let p = ProblemInstance::gaussian_mean(vec![0.5, -0.5, 1.0], 1.0, None, FeasibleSet::unconstrained(3)?)?;
    for eps in [0.04, 0.01, 0.0025] {
        let t = batched_accelerated_run(&p, &TargetAccuracy::new(eps, 0.1)?, 2.0, SampleStream::new(1), &[0.0; 3])?;
        println!(
            "eps {eps:<7} iterations {:>4}  samples {:>10}  gap {:.2e}",
            t.iterations,
            t.oracle_calls,
            population_gap(&p, &t.last)?
        );
    }
    Ok(())
}
