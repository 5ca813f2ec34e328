//! Command implementations behind the `fracvar` binary.
//!
//! All CSV output is deterministic: floats are printed with 17 significant
//! digits and `\n` line endings, so identical inputs produce byte-identical
//! files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::expr::{parse_lagrangian, LagrangianExpr};
use crate::fracops::{
    caputo_matrix, combined_caputo, make_grid, rl_derivative_matrix, rl_integral_matrix, Grid,
    Side, Trajectory,
};
use crate::pareto::{
    dominance_filter, epsilon_constraint_check, pareto_sweep, uniform_weight_grid, WeightVector,
};
use crate::problem::{ConstraintKind, EndpointCondition, ProblemSpec};
use crate::solver::{discretize_expression, operator_stack, solve, SolveOptions, SolveResult};
use crate::variational::{
    augment_isoperimetric, convexity_certificate, expression_residual, transversality_residual,
};

use super::problem_file::{parse_problem_file, ProblemFile, RunParams};

/// Stable process exit codes.
pub const EXIT_OK: i32 = 0;
/// Usage, file-format, or dimension problems.
pub const EXIT_USAGE: i32 = 2;
/// Mathematical domain violations.
pub const EXIT_DOMAIN: i32 = 3;
/// A solve that did not converge.
pub const EXIT_NOT_CONVERGED: i32 = 4;

/// Map an error to its exit code.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Domain(_) => EXIT_DOMAIN,
        _ => EXIT_USAGE,
    }
}

/// 17 significant digits; round-trips every f64 exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn solve_options(run: &RunParams) -> SolveOptions {
    SolveOptions {
        grad_tol: run.grad_tol,
        max_iters: run.max_iters,
        constraint_tol: run.constraint_tol,
        ..SolveOptions::default()
    }
}

/// Interior residual maximum over the window `[a + w(b-a), b - w(b-a)]`.
fn windowed_max(residual: &Array2<f64>, grid: &Grid, window: f64) -> f64 {
    let lo = grid.a() + window * (grid.b() - grid.a());
    let hi = grid.b() - window * (grid.b() - grid.a());
    let mut worst: f64 = 0.0;
    for k in 1..grid.n() {
        let x = grid.node(k);
        if x >= lo && x <= hi {
            for i in 0..residual.ncols() {
                worst = worst.max(residual[[k, i]].abs());
            }
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// deriv
// ---------------------------------------------------------------------------

/// Arguments of `fracvar deriv`.
pub struct DerivArgs {
    pub expr: String,
    pub op: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub out: PathBuf,
}

/// Sample `f`, apply one discrete fractional operator, write `x,f,Df`.
pub fn cmd_deriv(args: &DerivArgs) -> Result<()> {
    let expr = parse_lagrangian(&args.expr, 1, 0)?;
    if !expr.is_univariate() {
        return Err(Error::Invalid(
            "deriv expressions must be functions of x only".into(),
        ));
    }
    let grid = make_grid(args.a, args.b, args.n)?;
    let mut f = Vec::with_capacity(args.n + 1);
    for &x in grid.nodes() {
        f.push(expr.eval(&[x, 0.0, 0.0])?);
    }
    let op = match args.op.as_str() {
        "caputo_l" => caputo_matrix(&grid, args.alpha, Side::Left)?,
        "caputo_r" => caputo_matrix(&grid, args.alpha, Side::Right)?,
        "rl_l" => rl_derivative_matrix(&grid, args.alpha, Side::Left)?,
        "rl_r" => rl_derivative_matrix(&grid, args.alpha, Side::Right)?,
        "rli_l" => rl_integral_matrix(&grid, args.alpha, Side::Left)?,
        "rli_r" => rl_integral_matrix(&grid, args.alpha, Side::Right)?,
        "combined" => combined_caputo(&grid, args.alpha, args.beta, args.gamma)?,
        other => {
            return Err(Error::Invalid(format!(
                "unknown operator `{other}` (caputo_l|caputo_r|rl_l|rl_r|rli_l|rli_r|combined)"
            )))
        }
    };
    let df = op.apply(&f)?;
    let mut csv = String::from("x,f,Df\n");
    for k in 0..=args.n {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_f64(grid.node(k)),
            fmt_f64(f[k]),
            fmt_f64(df[k])
        );
    }
    write_file(&args.out, &csv)?;
    println!("wrote {} ({} rows)", args.out.display(), args.n + 1);
    Ok(())
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

/// Narrow a multiobjective file to one scalar objective via `--objective`
/// or `--weights`.
fn scalarize(
    problem: &ProblemSpec,
    objective: Option<usize>,
    weights: Option<&[f64]>,
) -> Result<ProblemSpec> {
    match (objective, weights) {
        (Some(_), Some(_)) => Err(Error::Invalid(
            "pass either --objective or --weights, not both".into(),
        )),
        (Some(k), None) => {
            if k == 0 || k > problem.n_objectives() {
                return Err(Error::Invalid(format!(
                    "--objective {k} out of range 1..{}",
                    problem.n_objectives()
                )));
            }
            problem.with_objectives(vec![problem.objective(k - 1).clone()])
        }
        (None, Some(w)) => {
            let w = WeightVector::new(w.to_vec())?;
            let combo = crate::pareto::weighted_objective(problem, &w)?;
            problem.with_objectives(vec![combo])
        }
        (None, None) => {
            if problem.n_objectives() == 1 {
                Ok(problem.clone())
            } else {
                Err(Error::Invalid(
                    "multiobjective problem: pass --objective k or --weights w1,..,wd".into(),
                ))
            }
        }
    }
}

/// Trajectory CSV `x,y1..yN,v1..vN` with `v` from the combined operator.
fn trajectory_csv(problem: &ProblemSpec, traj: &Trajectory) -> Result<String> {
    let grid = traj.grid();
    let m = traj.n_components();
    let o = problem.orders();
    let mut v = Vec::with_capacity(m);
    for i in 0..m {
        let op = combined_caputo(grid, o.alpha(i), o.beta(i), o.gamma(i))?;
        v.push(op.apply(&traj.component(i).to_vec())?);
    }
    let mut header = String::from("x");
    for i in 1..=m {
        let _ = write!(header, ",y{i}");
    }
    for i in 1..=m {
        let _ = write!(header, ",v{i}");
    }
    let mut csv = header;
    csv.push('\n');
    for k in 0..=grid.n() {
        let mut row = fmt_f64(grid.node(k));
        for i in 0..m {
            let _ = write!(row, ",{}", fmt_f64(traj.values()[[k, i]]));
        }
        for vi in &v {
            let _ = write!(row, ",{}", fmt_f64(vi[k]));
        }
        csv.push_str(&row);
        csv.push('\n');
    }
    Ok(csv)
}

fn print_solve_report(
    problem: &ProblemSpec,
    run: &RunParams,
    grid: &Grid,
    result: &SolveResult,
) -> Result<()> {
    println!("objective        = {}", fmt_f64(result.objective));
    println!("grad_norm        = {}", fmt_f64(result.grad_norm));
    println!("iterations       = {}", result.iterations);
    println!("converged        = {}", result.converged);
    if !result.multipliers.is_empty() {
        let list = result
            .multipliers
            .iter()
            .map(|&l| fmt_f64(l))
            .collect::<Vec<_>>()
            .join(", ");
        println!("multipliers      = [{list}]  (J + sum lambda_j (G_j - l_j) convention)");
        println!(
            "constraint_viol  = {}",
            fmt_f64(result.constraint_violation)
        );
    }
    // constrained solves are stationary for L + sum lambda_j G_j, not for
    // L alone, so the report measures the augmented integrand
    let effective = if result.multipliers.is_empty() {
        problem.objective(0).clone()
    } else {
        let mut terms = vec![(1.0, problem.objective(0))];
        for (lam, c) in result.multipliers.iter().zip(problem.constraints()) {
            terms.push((*lam, &c.integrand));
        }
        LagrangianExpr::linear_combination(&terms)?
    };
    let residual = expression_residual(problem, &effective, &result.trajectory, &[])?;
    println!(
        "el_interior_max  = {}  (window {})",
        fmt_f64(windowed_max(&residual, grid, run.residual_window)),
        run.residual_window
    );
    for i in 0..problem.n_components() {
        if !problem.boundary().right(i).is_fixed() {
            let t = transversality_residual(problem, 0, &result.trajectory, i, &[])?;
            println!(
                "transversality_{} = {} (complementarity {}, feasibility {})",
                i + 1,
                fmt_f64(t.residual),
                fmt_f64(t.complementarity),
                fmt_f64(t.feasibility)
            );
        }
    }
    Ok(())
}

/// `fracvar solve <file> [--objective k] [--weights w,..]`: solve and write
/// `<out>/solution.csv`. Returns the solve result for exit-code decisions.
pub fn cmd_solve(
    file: &Path,
    objective: Option<usize>,
    weights: Option<&[f64]>,
) -> Result<SolveResult> {
    let ProblemFile { problem, run } = parse_problem_file(file)?;
    let scalar = scalarize(&problem, objective, weights)?;
    let grid = make_grid(problem.a(), problem.b(), run.n)?;
    let result = solve(&scalar, &grid, &solve_options(&run))?;
    let csv = trajectory_csv(&scalar, &result.trajectory)?;
    let out = run.out.join("solution.csv");
    write_file(&out, &csv)?;
    println!("solution written to {}", out.display());
    print_solve_report(&scalar, &run, &grid, &result)?;
    Ok(result)
}

// ---------------------------------------------------------------------------
// pareto
// ---------------------------------------------------------------------------

/// `fracvar pareto <file> [--weights-count M] [--check]`: weighted-sum
/// sweep; one CSV row per weight plus per-weight trajectory files. Returns
/// true when every solve converged.
pub fn cmd_pareto(file: &Path, weights_count: Option<usize>, check: bool) -> Result<bool> {
    let ProblemFile { problem, run } = parse_problem_file(file)?;
    let d = problem.n_objectives();
    if d < 2 {
        return Err(Error::Invalid(
            "pareto sweeps need a multiobjective problem (d >= 2)".into(),
        ));
    }
    let m = weights_count.unwrap_or(run.weights);
    let weights = uniform_weight_grid(d, m)?;
    let grid = make_grid(problem.a(), problem.b(), run.n)?;
    let opts = solve_options(&run);
    let points = pareto_sweep(&problem, &weights, &grid, &opts)?;

    let checks: Option<Vec<(bool, bool)>> = if check {
        let kept = dominance_filter(&points, 1e-8);
        let surviving: Vec<&[f64]> = kept.iter().map(|p| p.objectives.as_slice()).collect();
        let mut flags = Vec::with_capacity(points.len());
        for point in &points {
            let nondominated = surviving.contains(&point.objectives.as_slice());
            let mut ec_pass = true;
            for i in 0..d {
                let report = epsilon_constraint_check(&problem, point, i, &grid, &opts)?;
                if report.improved {
                    ec_pass = false;
                }
            }
            flags.push((nondominated, ec_pass));
        }
        Some(flags)
    } else {
        None
    };

    let mut header = String::new();
    for i in 1..=d {
        let _ = write!(header, "{}w{i}", if i > 1 { "," } else { "" });
    }
    for i in 1..=d {
        let _ = write!(header, ",J{i}");
    }
    header.push_str(",converged");
    if check {
        header.push_str(",nondominated,ec_pass");
    }
    let mut csv = header;
    csv.push('\n');
    for (idx, point) in points.iter().enumerate() {
        let mut row = String::new();
        for (i, &w) in point.weight.components().iter().enumerate() {
            let _ = write!(row, "{}{}", if i > 0 { "," } else { "" }, fmt_f64(w));
        }
        for &j in &point.objectives {
            let _ = write!(row, ",{}", fmt_f64(j));
        }
        let _ = write!(row, ",{}", if point.result.converged { 1 } else { 0 });
        if let Some(flags) = &checks {
            let (nd, ec) = flags[idx];
            let _ = write!(
                row,
                ",{},{}",
                if nd { 1 } else { 0 },
                if ec { 1 } else { 0 }
            );
        }
        csv.push_str(&row);
        csv.push('\n');
    }
    write_file(&run.out.join("pareto.csv"), &csv)?;

    for (idx, point) in points.iter().enumerate() {
        let csv = trajectory_csv(&problem, &point.result.trajectory)?;
        let name = format!("trajectory_{:03}.csv", idx + 1);
        write_file(&run.out.join(name), &csv)?;
    }
    let all_converged = points.iter().all(|p| p.result.converged);
    println!(
        "pareto sweep: {} weights, {} converged, results in {}",
        points.len(),
        points.iter().filter(|p| p.result.converged).count(),
        run.out.display()
    );
    Ok(all_converged)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

/// Read a trajectory CSV (schema `x,y1..yN[,v1..vN]`) against a grid.
fn read_trajectory(path: &Path, grid: &Grid, m: usize) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Invalid(format!("{}: empty trajectory file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"x") || cols.len() < m + 1 {
        return Err(Error::Dimension(format!(
            "{}: expected header x,y1..y{m}[,v..], got `{header}`",
            path.display()
        )));
    }
    for (i, col) in cols.iter().enumerate().skip(1).take(m) {
        let want = format!("y{i}");
        if *col != want {
            return Err(Error::Dimension(format!(
                "{}: expected column {want}, got `{col}`",
                path.display()
            )));
        }
    }
    let mut values = Array2::zeros((grid.n() + 1, m));
    let mut row_count = 0usize;
    for (row_idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if row_idx > grid.n() {
            return Err(Error::Dimension(format!(
                "{}: more rows than the {}-node grid",
                path.display(),
                grid.n() + 1
            )));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < m + 1 {
            return Err(Error::Dimension(format!(
                "{}: row {} has {} fields, expected at least {}",
                path.display(),
                row_idx + 2,
                fields.len(),
                m + 1
            )));
        }
        let x: f64 = fields[0]
            .parse()
            .map_err(|_| Error::Invalid(format!("bad x value `{}`", fields[0])))?;
        if (x - grid.node(row_idx)).abs() > 1e-9 * (1.0 + grid.node(row_idx).abs()) {
            return Err(Error::Dimension(format!(
                "{}: node {} is {} but the grid expects {}",
                path.display(),
                row_idx,
                x,
                grid.node(row_idx)
            )));
        }
        for i in 0..m {
            values[[row_idx, i]] = fields[1 + i]
                .parse()
                .map_err(|_| Error::Invalid(format!("bad value `{}`", fields[1 + i])))?;
        }
        row_count += 1;
    }
    if row_count != grid.n() + 1 {
        return Err(Error::Dimension(format!(
            "{}: {} rows for a {}-node grid",
            path.display(),
            row_count,
            grid.n() + 1
        )));
    }
    Trajectory::new(grid.clone(), values)
}

/// `fracvar verify <file> --trajectory <csv> [--lambda l1,..]
/// [--objective k | --weights w,..]`: residual report for a supplied
/// trajectory. Returns true when every residual is below the `[run]`
/// tolerances.
pub fn cmd_verify(
    file: &Path,
    trajectory: &Path,
    lambda: Option<&[f64]>,
    objective: Option<usize>,
    weights: Option<&[f64]>,
) -> Result<bool> {
    let ProblemFile { problem, run } = parse_problem_file(file)?;
    let scalar = scalarize(&problem, objective, weights)?;
    let grid = make_grid(problem.a(), problem.b(), run.n)?;
    let traj = read_trajectory(trajectory, &grid, problem.n_components())?;

    let constraints = scalar.constraints();
    if constraints.iter().any(|c| !c.kind.is_isoperimetric()) {
        return Err(Error::Invalid(
            "verify supports isoperimetric constraints only; use the library API for pointwise systems"
                .into(),
        ));
    }
    let effective: LagrangianExpr = if constraints.is_empty() {
        if lambda.is_some() {
            return Err(Error::Invalid(
                "--lambda given but the problem has no constraints".into(),
            ));
        }
        scalar.objective(0).clone()
    } else {
        let lambda = lambda.ok_or_else(|| {
            Error::Invalid(format!(
                "problem has {} isoperimetric constraints; pass --lambda l1,..,l{}",
                constraints.len(),
                constraints.len()
            ))
        })?;
        if lambda.len() != constraints.len() {
            return Err(Error::Dimension(format!(
                "{} multipliers for {} constraints",
                lambda.len(),
                constraints.len()
            )));
        }
        // F = L - sum lambda_j G^j
        augment_isoperimetric(&scalar, 0, lambda)?
    };

    let mut ok = true;

    let residual = expression_residual(&scalar, &effective, &traj, &[])?;
    let el_max = windowed_max(&residual, &grid, run.residual_window);
    let el_ok = el_max <= run.residual_tol;
    ok &= el_ok;
    println!(
        "el_interior_max   = {} (window {}, tol {}) {}",
        fmt_f64(el_max),
        run.residual_window,
        fmt_f64(run.residual_tol),
        if el_ok { "PASS" } else { "FAIL" }
    );

    let mats = operator_stack(&scalar, &grid)?;
    for (j, c) in constraints.iter().enumerate() {
        let d = discretize_expression(&scalar, c.integrand.clone(), &grid, mats.clone(), false)?;
        let value = d.value(traj.values())?;
        let target = c.target.unwrap();
        let (violation, comp) = match c.kind {
            ConstraintKind::IsoperimetricEq => ((value - target).abs(), 0.0),
            ConstraintKind::IsoperimetricIneq => {
                let lam = lambda.map(|l| l[j]).unwrap_or(0.0);
                ((value - target).max(0.0), lam * (value - target))
            }
            _ => unreachable!(),
        };
        let c_ok = violation <= run.constraint_tol;
        ok &= c_ok;
        println!(
            "constraint_{}      = {} (target {}, violation {}, complementarity {}) {}",
            j + 1,
            fmt_f64(value),
            fmt_f64(target),
            fmt_f64(violation),
            fmt_f64(comp),
            if c_ok { "PASS" } else { "FAIL" }
        );
    }

    for i in 0..scalar.n_components() {
        let right = scalar.boundary().right(i);
        if right.is_fixed() {
            continue;
        }
        let t = transversality_residual(&scalar, 0, &traj, i, &[])?;
        let t_ok = match right {
            EndpointCondition::Free => t.residual.abs() <= run.residual_tol,
            // inequality-bounded endpoints call for residual <= 0
            EndpointCondition::UpperBounded(_) => {
                t.residual <= run.residual_tol && t.feasibility <= run.constraint_tol
            }
            EndpointCondition::Fixed(_) => unreachable!(),
        };
        ok &= t_ok;
        println!(
            "transversality_{}  = {} (complementarity {}, feasibility {}) {}",
            i + 1,
            fmt_f64(t.residual),
            fmt_f64(t.complementarity),
            fmt_f64(t.feasibility),
            if t_ok { "PASS" } else { "FAIL" }
        );
    }

    // informational: sampled joint-convexity certificate over the
    // trajectory's own value range
    let mut bounds = Vec::new();
    for i in 0..scalar.n_components() {
        let col = traj.component(i);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in col {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let pad = 0.5 * (hi - lo).max(1.0);
        bounds.push((lo - pad, hi + pad));
    }
    for _ in 0..scalar.n_components() {
        bounds.push((-2.0, 2.0));
    }
    match convexity_certificate(&effective, (grid.a(), grid.b()), &bounds, &[], 2000) {
        Ok(report) => println!(
            "convexity         = {} violations / {} samples (worst gap {})",
            report.violations,
            report.samples,
            fmt_f64(report.worst_gap)
        ),
        Err(e) => println!("convexity         = not evaluated ({e})"),
    }

    println!("verify            = {}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}
