//! Weighted-sum Pareto front of a biobjective fractional problem.
//!
//! Objectives J¹ = ∫ ½(D^α y − e^x)² dx (tracking) and J² = ∫ ½(D^α y)² dx
//! (energy) with y(0) = 0, y(1) = e − 1, α = ½. An 11-weight sweep traces
//! the front; dominance filtering and ε-constraint probes then confirm
//! every converged point is a Pareto candidate.
//!
//! ```bash
//! cargo run --example pareto_front
//! ```

use fracvar::expr::parse_lagrangian;
use fracvar::fracops::{make_grid, FracOrders};
use fracvar::pareto::{
    dominance_filter, epsilon_constraint_check, pareto_sweep, uniform_weight_grid,
};
use fracvar::problem::{BoundarySpec, ProblemSpec};
use fracvar::solver::SolveOptions;

fn main() -> fracvar::Result<()> {
    let alpha = 0.5;
    let chi = 1.0f64.exp() - 1.0;
    let problem = ProblemSpec::new(
        0.0,
        1.0,
        FracOrders::uniform(alpha, alpha, 1.0, 1)?,
        vec![
            parse_lagrangian("0.5*(v1 - exp(x))^2", 1, 0)?,
            parse_lagrangian("0.5*v1^2", 1, 0)?,
        ],
        BoundarySpec::fixed_scalar(0.0, chi),
        vec![],
    )?;
    let grid = make_grid(0.0, 1.0, 128)?;
    let opts = SolveOptions {
        grad_tol: 1e-7,
        ..SolveOptions::default()
    };
    let weights = uniform_weight_grid(2, 11)?;
    let points = pareto_sweep(&problem, &weights, &grid, &opts)?;

    println!(
        "{:>5}  {:>12}  {:>12}  {:>9}",
        "w1", "J1 (track)", "J2 (energy)", "converged"
    );
    for p in &points {
        println!(
            "{:>5.2}  {:>12.6}  {:>12.6}  {:>9}",
            p.weight.components()[0],
            p.objectives[0],
            p.objectives[1],
            p.result.converged
        );
    }

    let kept = dominance_filter(&points, 1e-8);
    println!(
        "\ndominance filter: {} of {} points survive",
        kept.len(),
        points.len()
    );

    println!("epsilon-constraint probes (improved = a better feasible point exists):");
    for (idx, point) in points.iter().enumerate() {
        let mut flags = Vec::new();
        for i in 0..2 {
            let report = epsilon_constraint_check(&problem, point, i, &grid, &opts)?;
            flags.push(report.improved);
        }
        if flags.iter().any(|&f| f) {
            println!("  point {idx}: improvable {flags:?}");
        }
    }
    println!("  (no output above a point means it passed both probes)");
    Ok(())
}
