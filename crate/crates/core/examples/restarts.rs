//! Restarted SGD adapts to the growth exponent s of f(x) - f* >= mu ||x - x*||^s.

use sastra::problems::{population_gap, ProblemInstance, SampleStream};
use sastra::sa::{restart_plan, run_plan, TargetAccuracy};

fn main() -> sastra::Result<()> {
    for s in [1.0, 2.0, 3.0] {
        let p = ProblemInstance::norm_power(2, s, 0.5)?;
        let c = p.constants();
        println!("s = {s}");
        for eps in [0.1, 0.01, 0.001] {
            let target = TargetAccuracy::new(eps, 0.1)?;
            let plan = restart_plan(c.s, c.mu_ps, c.m_p, &target, 2.0, 1.0)?;
            let t = run_plan(&p, &plan, c.m_p, SampleStream::new(1), &[1.0, 0.0])?;
            println!(
                "  eps {eps:<6} stages {:>2}  samples {:>9}  gap {:.2e}",
                plan.stages.len(),
                plan.total_samples(),
                population_gap(&p, &t.average)?
            );
        }
    }
    Ok(())
}
