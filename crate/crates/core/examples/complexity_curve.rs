//! Empirical sample complexity N(eps, beta) for restarted SGD and its fitted exponent.
//! Writes the curve as CSV to the path given as the first argument, if any.

use sastra::harness::{
    curve_csv, sample_complexity_curve, Algorithm, FamilyConfig, ProblemConfig, SetConfig, SolverConfig,
    SolverExperiment,
};

fn main() -> sastra::Result<()> {
    let problem = ProblemConfig {
        family: FamilyConfig::NormPower { s: 2.0, sigma: 0.5 },
        dim: 2,
        set: SetConfig::L2Ball { radius: 1.0 },
        seed: 0,
    };
    let mut solver = SolverConfig::new(Algorithm::Restart);
    solver.start = Some(vec![1.0, 0.0]);
    let exp = SolverExperiment::new(problem.build()?, solver)?;
    let curve = sample_complexity_curve(&exp, &[0.2, 0.1, 0.05, 0.025, 0.0125], 0.3, 50, 1 << 22, 0)?;
    for p in &curve.points {
        println!("eps {:<7} N = {:>6}  ({}/{} successes)", p.epsilon, p.n, p.successes, p.trials);
    }
    if let Some(fit) = &curve.fit {
        println!("fitted exponent {:.3} (monotone: {})", fit.slope, curve.monotone);
    }
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, curve_csv(&curve)).map_err(|source| sastra::Error::Io { path: path.into(), source })?;
    }
    Ok(())
}
