//! Tour of the integrand expression language.
//!
//! Integrands are written over the slots `x`, `y1..yN` (trajectory
//! values), `v1..vN` (combined-Caputo derivative values), and optional
//! parameters `p1..pr`. Partial derivatives are exact.
//!
//! ```bash
//! cargo run --example expression_dsl
//! ```

use fracvar::expr::parse_lagrangian;

fn main() -> fracvar::Result<()> {
    // arity is 1 + 2N + r; here N = 1, r = 1
    let expr = parse_lagrangian("y1*v1 - p1*v1^2", 1, 1)?;
    println!("source:   {}", expr.source());
    println!("canonical: {expr}");
    println!("arity:    {} (x, y1, v1, p1)", expr.arity());

    let args = [0.25, 2.0, 3.0, 0.5];
    println!("\nat (x, y1, v1, p1) = {args:?}");
    println!("value     = {}", expr.eval(&args)?);
    let grads = expr.partials(&args)?;
    println!("d/dx      = {}", grads[0]);
    println!("d/dy1     = {}", grads[1]);
    println!("d/dv1     = {}", grads[2]);
    println!("d/dp1     = {}", grads[3]);

    // the function set includes gamma and the Mittag-Leffler function
    let special = parse_lagrangian("gamma(2 + y1) + mlf(0.5, x)", 1, 0)?;
    let at = [1.0, 3.0, 0.0];
    println!("\n{} at (x, y1, v1) = {at:?}", special.source());
    println!("value     = {:.10}", special.eval(&at)?);
    println!(
        "d/dy1     = {:.10}  (digamma chain rule)",
        special.partial(&at, 1)?
    );

    // syntax errors carry byte offsets
    match parse_lagrangian("v1 + unknown", 1, 0) {
        Err(e) => println!("\nparse error example: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
