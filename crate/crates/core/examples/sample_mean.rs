//! With gamma_k = 1/(mu k) on the Gaussian-mean loss, the SGD iterate is the running sample mean.

use sastra::geometry::FeasibleSet;
use sastra::problems::{population_gap, ProblemInstance, Sample, SampleStream};
use sastra::sa::{sgd_run, StepSchedule};

fn main() -> sastra::Result<()> {
    let p = ProblemInstance::gaussian_mean(vec![0.7, -0.2], 1.0, None, FeasibleSet::unconstrained(2)?)?;
    let stream = SampleStream::new(11);
    let n = 10_000;
    let trace = sgd_run(&p, StepSchedule::inverse_strong(2.0)?, n, stream, &[0.0, 0.0])?;

    let mut s = stream;
    let mut sum = [0.0; 2];
    for _ in 0..n {
        if let Sample::Point(v) = p.sample(&mut s) {
            sum[0] += v[0];
            sum[1] += v[1];
        }
    }
    let mean = [sum[0] / n as f64, sum[1] / n as f64];
    println!("last iterate  {:?}", trace.last);
    println!("sample mean   {mean:?}");
    println!("population gap of the last iterate {:.3e}", population_gap(&p, &trace.last)?);
    Ok(())
}
