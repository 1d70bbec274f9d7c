//! Entropic mirror descent on the probability simplex versus Euclidean projection.

use sastra::geometry::{FeasibleSet, NormTag};
use sastra::problems::{population_gap, ProblemInstance, SampleStream};
use sastra::sa::{sgd_run_with, StepSchedule, SgdOptions, Window};

fn main() -> sastra::Result<()> {
    let n = 50;
    let mut mean = vec![0.0; n];
    mean[0] = 0.6;
    mean[1] = 0.4;
    let base = ProblemInstance::gaussian_mean(mean, 0.3, Some(3.0), FeasibleSet::simplex(n)?)?;
    let x0 = vec![1.0 / n as f64; n];
    let opts = SgdOptions { window: Some(Window::Full), record_gaps: false };

    for (label, norm) in [("euclidean", NormTag::L2), ("entropic", NormTag::L1)] {
        let p = base.clone().with_norm(norm);
        let m = p.constants().m_p;
        for steps in [100u64, 1_000, 10_000] {
            let r = if norm == NormTag::L1 { (2.0 * (n as f64).ln()).sqrt() } else { 2f64.sqrt() };
            let sched = StepSchedule::constant_horizon(r, m, steps)?;
            let t = sgd_run_with(&p, sched, steps, SampleStream::new(3), &x0, opts)?;
            println!("{label:>9}  N = {steps:>5}  gap {:.3e}", population_gap(&p, &t.average)?);
        }
    }
    Ok(())
}
