#![allow(clippy::needless_range_loop)]

//! Convergence of the L1 Caputo discretization.
//!
//! Applies the left Caputo derivative of order 1/2 to f(x) = x² on
//! increasingly fine grids and compares with the closed form
//! 2x^{3/2}/Γ(5/2). The observed order approaches the theoretical 2 − α.
//!
//! ```bash
//! cargo run --example operator_convergence
//! ```

use fracvar::fracops::{caputo_matrix, make_grid, Side};
use fracvar::specfun::gamma_fn;

fn main() -> fracvar::Result<()> {
    let alpha = 0.5;
    let g25 = gamma_fn(2.5)?;
    println!("left Caputo of x^2, alpha = {alpha}");
    println!("{:>6}  {:>12}  {:>8}", "n", "max error", "order");
    let mut prev: Option<f64> = None;
    for n in [64, 128, 256, 512, 1024, 2048] {
        let grid = make_grid(0.0, 1.0, n)?;
        let out = caputo_matrix(&grid, alpha, Side::Left)?.apply(&grid.sample(|x| x * x))?;
        let mut err = 0.0f64;
        for k in 0..=n {
            let want = 2.0 * grid.node(k).powf(1.5) / g25;
            err = err.max((out[k] - want).abs());
        }
        match prev {
            Some(p) => println!("{n:>6}  {err:>12.4e}  {:>8.3}", (p / err).log2()),
            None => println!("{n:>6}  {err:>12.4e}  {:>8}", "-"),
        }
        prev = Some(err);
    }
    println!("\ntheoretical order: 2 - alpha = {}", 2.0 - alpha);
    Ok(())
}
