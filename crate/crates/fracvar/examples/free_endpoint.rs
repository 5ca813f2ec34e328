//! Free and bounded right endpoints with transversality diagnostics.
//!
//! With a free right endpoint the natural boundary condition
//!
//! ```text
//! [γ I^{1−α}_right ∂_v L − (1−γ) I^{1−β}_left ∂_v L](b) = 0
//! ```
//!
//! must hold at the minimizer; with a binding upper bound the condition
//! switches to a signed inequality plus complementarity. Both cases are
//! solved and their residuals reported.
//!
//! ```bash
//! cargo run --example free_endpoint
//! ```

use fracvar::expr::parse_lagrangian;
use fracvar::fracops::{make_grid, FracOrders};
use fracvar::problem::{BoundarySpec, EndpointCondition, ProblemSpec};
use fracvar::solver::{solve_basic, SolveOptions};
use fracvar::variational::transversality_residual;

fn main() -> fracvar::Result<()> {
    let opts = SolveOptions {
        grad_tol: 1e-7,
        ..SolveOptions::default()
    };

    println!("free right endpoint: minimize int 0.5 v^2 + y, y(0) = 0");
    println!("{:>6}  {:>10}  {:>14}", "n", "y(1)", "transversality");
    let free = ProblemSpec::new(
        0.0,
        1.0,
        FracOrders::uniform(0.5, 0.5, 1.0, 1)?,
        vec![parse_lagrangian("0.5*v1^2 + y1", 1, 0)?],
        BoundarySpec::new(
            vec![EndpointCondition::Fixed(0.0)],
            vec![EndpointCondition::Free],
        )?,
        vec![],
    )?;
    for n in [128, 256, 512, 1024] {
        let grid = make_grid(0.0, 1.0, n)?;
        let r = solve_basic(&free, &grid, &opts)?;
        let t = transversality_residual(&free, 0, &r.trajectory, 0, &[])?;
        println!(
            "{n:>6}  {:>10.5}  {:>14.4e}",
            r.trajectory.values()[[n, 0]],
            t.residual
        );
    }

    println!("\nbinding upper bound: minimize int 0.5 (v - 1)^2, y(0) = 0, y(1) <= 0.6");
    let bounded = ProblemSpec::new(
        0.0,
        1.0,
        FracOrders::uniform(0.5, 0.5, 1.0, 1)?,
        vec![parse_lagrangian("0.5*(v1 - 1)^2", 1, 0)?],
        BoundarySpec::new(
            vec![EndpointCondition::Fixed(0.0)],
            vec![EndpointCondition::UpperBounded(0.6)],
        )?,
        vec![],
    )?;
    let grid = make_grid(0.0, 1.0, 512)?;
    let r = solve_basic(&bounded, &grid, &opts)?;
    let t = transversality_residual(&bounded, 0, &r.trajectory, 0, &[])?;
    println!(
        "  y(1)            = {:.6} (bound 0.6)",
        r.trajectory.values()[[512, 0]]
    );
    println!(
        "  residual        = {:.4e} (<= 0 for a binding bound)",
        t.residual
    );
    println!("  complementarity = {:.4e}", t.complementarity);
    println!("  feasibility gap = {:.4e}", t.feasibility);
    Ok(())
}
