//! Gradient sliding on f = g + h: gradients of the cheap smooth part g are called
//! about sqrt(L_h / L_g) times less often than those of h.

use sastra::sliding::{sliding_run, split_quadratic_instance, SlidingParams};

fn main() -> sastra::Result<()> {
    let n = 40;
    let x0 = vec![0.0; n];
    for l_h in [4.0, 25.0, 100.0, 400.0] {
        let (mut g, mut h) = split_quadratic_instance(n, 1.0, l_h, 0.01, 0)?;
        let params = SlidingParams::new(1.0, l_h, 0.01)?;
        let out = sliding_run(&mut g, Some(&mut h), &params, &x0, 1e-6, 1_000_000)?;
        println!(
            "L_h/L_g = {l_h:>5}: outer {:>4}, grad g {:>5}, grad h {:>6}, ratio {:>5.2} (sqrt {:.1})",
            out.ledger.outer_iterations,
            out.ledger.grad_g_calls,
            out.ledger.grad_h_calls,
            out.ledger.ratio(),
            l_h.sqrt()
        );
    }
    Ok(())
}
