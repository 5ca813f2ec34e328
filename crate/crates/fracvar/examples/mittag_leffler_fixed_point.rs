//! The Mittag-Leffler trajectory as a fixed point of the Caputo derivative.
//!
//! ybar(x) = E_α(x^α) satisfies D^α ybar = ybar for the left Caputo
//! derivative. This example tabulates the identity's discrete error for
//! α = 1/2 and shows it shrinking with the grid, away from the singular
//! left endpoint.
//!
//! ```bash
//! cargo run --example mittag_leffler_fixed_point
//! ```

use fracvar::fracops::{caputo_matrix, make_grid, Side};
use fracvar::specfun::mittag_leffler;

fn main() -> fracvar::Result<()> {
    let alpha = 0.5;
    println!("D^{alpha} E_a(x^a) vs E_a(x^a), error over x in [0.1, 0.9]");
    println!("{:>6}  {:>12}", "n", "max error");
    for n in [512, 1024, 2048, 4096] {
        let grid = make_grid(0.0, 1.0, n)?;
        let ybar: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&x| mittag_leffler(alpha, x.powf(alpha)))
            .collect::<fracvar::Result<_>>()?;
        let out = caputo_matrix(&grid, alpha, Side::Left)?.apply(&ybar)?;
        let mut err = 0.0f64;
        for k in 0..=n {
            let x = grid.node(k);
            if (0.1..=0.9).contains(&x) {
                err = err.max((out[k] - ybar[k]).abs());
            }
        }
        println!("{n:>6}  {err:>12.4e}");
    }

    println!("\nsample values of the trajectory:");
    for x in [0.0f64, 0.25, 0.5, 0.75, 1.0] {
        println!(
            "  ybar({x:.2}) = {:.10}",
            mittag_leffler(alpha, x.powf(alpha))?
        );
    }
    Ok(())
}
