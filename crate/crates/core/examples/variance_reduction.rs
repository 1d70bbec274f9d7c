//! SVRG on a finite sum: epochs to a certified accuracy barely move with the condition number.

use sastra::problems::{ProblemInstance, SampleStream};
use sastra::saa::{build_empirical, vr_solve_with, Composite, VrOptions};

fn main() -> sastra::Result<()> {
    let opts = VrOptions { track_variance: true, ..VrOptions::default() };
    for kappa in [10.0, 50.0, 100.0, 500.0] {
        let p = ProblemInstance::random_finite_sum(200, 10, kappa, 1, false)?;
        let e = build_empirical(&p, 200, SampleStream::new(0), Composite::None)?;
        let out = vr_solve_with(&e, 1e-8, 1_000, SampleStream::new(5), opts)?;
        let first = out.variance_proxy.first().copied().unwrap_or(f64::NAN);
        let last = out.variance_proxy.last().copied().unwrap_or(f64::NAN);
        println!(
            "kappa {kappa:>5}: epochs {:>3}, certificate {:.1e}, variance proxy {first:.1e} -> {last:.1e}",
            out.epochs, out.certificate
        );
    }
    Ok(())
}
