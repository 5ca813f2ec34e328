//! First-order optimality conditions as residuals.
//!
//! Every theorem of the underlying calculus turns into a checkable
//! node-wise quantity here:
//!
//! * [`euler_lagrange_residual`]: `∂_{y_i} L + D^{β_i,α_i}_{1−γ_i} ∂_{v_i} L`
//!   sampled along a trajectory. Zero (in the limit) at extremals.
//! * [`transversality_residual`]: the natural-boundary-condition value at
//!   `x = b` for free or upper-bounded right endpoints, with its
//!   complementarity and feasibility companions.
//! * [`augment_isoperimetric`]: the augmented integrand `F = L − Σ λ_j G^j`
//!   whose Euler-Lagrange system characterizes isoperimetric extremals.
//!   This is the equality-constrained sign convention; the inequality /
//!   pointwise machinery uses `F = L + Σ λ_j (G^j + φ_j²)` instead, and
//!   reports say which convention is in force.
//! * [`pointwise_system_residual`]: multiplier-system residuals for
//!   pointwise (nonholonomic) constraints, with slack functions for the
//!   inequality case.
//! * [`convexity_certificate`]: sampled check of joint convexity in
//!   `(y, v)`, the hypothesis of the sufficiency theorems.
//!
//! Rows 0 and n of a residual matrix sit on the boundary where the dual
//! operator is singular; convergence claims are interior-only, and
//! [`interior_max_abs`] implements that measurement.

use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::LagrangianExpr;
use crate::fracops::{
    combined_caputo, dual_combined_rl, rl_integral_matrix, trapezoid_quadrature, Side, Trajectory,
};
use crate::problem::{ConstraintKind, EndpointCondition, ProblemSpec};

/// Which sign the multiplier carries in an augmented integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// `F = L − Σ λ_j G^j` (equality-constrained isoperimetric form).
    ObjectiveMinusLambdaG,
    /// `F = L + Σ λ_j G^j` (pointwise / inequality-slack form).
    ObjectivePlusLambdaG,
}

/// Multipliers attached to a constraint list: constants for isoperimetric
/// constraints, sampled functions (plus optional slack functions) for
/// pointwise ones.
#[derive(Debug, Clone)]
pub enum MultiplierSet {
    Constants(Vec<f64>),
    Functions {
        lambda: Vec<Vec<f64>>,
        slacks: Option<Vec<Vec<f64>>>,
    },
}

/// Sample expression arguments `(x_k, y(x_k), v(x_k), params)` at node `k`.
fn node_args(traj: &Trajectory, v: &Array2<f64>, params: &[f64], k: usize, buf: &mut Vec<f64>) {
    let m = traj.n_components();
    buf.clear();
    buf.push(traj.grid().node(k));
    for i in 0..m {
        buf.push(traj.values()[[k, i]]);
    }
    for i in 0..m {
        buf.push(v[[k, i]]);
    }
    buf.extend_from_slice(params);
}

/// Combined-Caputo derivative columns `v_i = (ᶜD^{α_i,β_i}_{γ_i} y_i)` for
/// every component of a trajectory.
fn combined_derivatives(problem: &ProblemSpec, traj: &Trajectory) -> Result<Array2<f64>> {
    let m = problem.n_components();
    let n = traj.grid().n();
    let mut v = Array2::zeros((n + 1, m));
    for i in 0..m {
        let o = problem.orders();
        let op = combined_caputo(traj.grid(), o.alpha(i), o.beta(i), o.gamma(i))?;
        let col = op.apply(&traj.component(i).to_vec())?;
        for k in 0..=n {
            v[[k, i]] = col[k];
        }
    }
    Ok(v)
}

fn check_compat(problem: &ProblemSpec, traj: &Trajectory) -> Result<()> {
    if traj.n_components() != problem.n_components() {
        return Err(Error::Dimension(format!(
            "trajectory has {} components, problem has {}",
            traj.n_components(),
            problem.n_components()
        )));
    }
    let g = traj.grid();
    if (g.a() - problem.a()).abs() > 1e-12 || (g.b() - problem.b()).abs() > 1e-12 {
        return Err(Error::Dimension(format!(
            "trajectory grid [{}, {}] does not match problem interval [{}, {}]",
            g.a(),
            g.b(),
            problem.a(),
            problem.b()
        )));
    }
    Ok(())
}

/// Node-wise Euler-Lagrange residual of one objective along a trajectory.
///
/// Returns an `(n+1) × N` matrix whose `(k, i)` entry is
/// `∂_{y_i} L[y](x_k) + (D^{β_i,α_i}_{1−γ_i} ∂_{v_i} L[y])(x_k)`.
/// Rows 0 and n are reported but sit on the boundary; use
/// [`interior_max_abs`] for convergence measurements. `params` fills the
/// expression's parameter slots (empty when it has none).
pub fn euler_lagrange_residual(
    problem: &ProblemSpec,
    objective_index: usize,
    traj: &Trajectory,
    params: &[f64],
) -> Result<Array2<f64>> {
    check_compat(problem, traj)?;
    if objective_index >= problem.n_objectives() {
        return Err(Error::Invalid(format!(
            "objective index {objective_index} out of range (d = {})",
            problem.n_objectives()
        )));
    }
    let expr = problem.objective(objective_index);
    expression_residual(problem, expr, traj, params)
}

/// Euler-Lagrange residual of an arbitrary integrand over this problem's
/// orders (used for augmented integrands).
pub fn expression_residual(
    problem: &ProblemSpec,
    expr: &LagrangianExpr,
    traj: &Trajectory,
    params: &[f64],
) -> Result<Array2<f64>> {
    check_compat(problem, traj)?;
    let m = problem.n_components();
    let n = traj.grid().n();
    if expr.n_components() != m {
        return Err(Error::Dimension(
            "integrand component count does not match problem".into(),
        ));
    }
    let v = combined_derivatives(problem, traj)?;

    // gY[(k, i)] = ∂_{y_i} expr at node k, gV likewise for the v slots
    let mut g_y = Array2::zeros((n + 1, m));
    let mut g_v = Array2::zeros((n + 1, m));
    let mut args = Vec::with_capacity(expr.arity());
    for k in 0..=n {
        node_args(traj, &v, params, k, &mut args);
        // y and v slots only: the x slot can be singular at grid nodes
        for i in 0..m {
            g_y[[k, i]] = expr.partial(&args, 1 + i)?;
            g_v[[k, i]] = expr.partial(&args, 1 + m + i)?;
        }
    }

    let mut residual = Array2::zeros((n + 1, m));
    for i in 0..m {
        let o = problem.orders();
        let dual = dual_combined_rl(traj.grid(), o.alpha(i), o.beta(i), o.gamma(i))?;
        let applied = dual.apply(&g_v.column(i).to_vec())?;
        for k in 0..=n {
            residual[[k, i]] = g_y[[k, i]] + applied[k];
        }
    }
    Ok(residual)
}

/// Maximum absolute entry over interior rows `1..n-1`.
pub fn interior_max_abs(residual: &Array2<f64>) -> f64 {
    let n = residual.nrows() - 1;
    let mut worst: f64 = 0.0;
    for k in 1..n {
        for i in 0..residual.ncols() {
            worst = worst.max(residual[[k, i]].abs());
        }
    }
    worst
}

/// Transversality condition at the right endpoint for one component.
#[derive(Debug, Clone, Copy)]
pub struct TransversalityReport {
    /// `γ_l (I^{1−α_l}_right ∂_{v_l}L) − (1−γ_l)(I^{1−β_l}_left ∂_{v_l}L)`
    /// at `x = b`, extrapolated from the last two interior nodes.
    pub residual: f64,
    /// `(y_l(b) − y_l^b) · residual`; zero is reported for a free endpoint.
    pub complementarity: f64,
    /// `max(0, y_l(b) − y_l^b)`; zero for a free endpoint.
    pub feasibility: f64,
    /// The same boundary expression read directly off the last grid row,
    /// where the right-sided integral factor is identically zero for
    /// bounded integrands; kept alongside the extrapolated value so both
    /// readings of "value at b" are visible.
    pub raw_endpoint_value: f64,
}

/// Evaluate the transversality residual for component `l` (0-based) of one
/// objective. The component must have a `Free` or `UpperBounded` right
/// endpoint.
///
/// The boundary factor of a right-sided integral vanishes identically at
/// the last node for bounded integrands, which would make the raw node
/// value vacuous; the value at `x = b` is therefore estimated by two-node
/// Richardson extrapolation from nodes `n−2` and `n−1`.
pub fn transversality_residual(
    problem: &ProblemSpec,
    objective_index: usize,
    traj: &Trajectory,
    component: usize,
    params: &[f64],
) -> Result<TransversalityReport> {
    check_compat(problem, traj)?;
    let m = problem.n_components();
    if component >= m {
        return Err(Error::Invalid(format!(
            "component {component} out of range (N = {m})"
        )));
    }
    let right = problem.boundary().right(component);
    if right.is_fixed() {
        return Err(Error::Invalid(format!(
            "component {} has a fixed right endpoint; transversality does not apply",
            component + 1
        )));
    }
    let expr = problem.objective(objective_index);
    let v = combined_derivatives(problem, traj)?;
    let grid = traj.grid();
    let n = grid.n();

    // ∂_{v_l} L along the trajectory
    let mut s = vec![0.0; n + 1];
    let mut args = Vec::with_capacity(expr.arity());
    let slot = 1 + m + component;
    for k in 0..=n {
        node_args(traj, &v, params, k, &mut args);
        s[k] = expr.partial(&args, slot)?;
    }

    let o = problem.orders();
    let (alpha, beta, gamma) = (o.alpha(component), o.beta(component), o.gamma(component));
    let u_right = rl_integral_matrix(grid, 1.0 - alpha, Side::Right)?.apply(&s)?;
    let u_left = rl_integral_matrix(grid, 1.0 - beta, Side::Left)?.apply(&s)?;
    let phi = |k: usize| -> f64 { gamma * u_right[k] - (1.0 - gamma) * u_left[k] };
    let residual = 2.0 * phi(n - 1) - phi(n - 2);
    let raw_endpoint_value = phi(n);

    let (complementarity, feasibility) = match right {
        EndpointCondition::Free => (0.0, 0.0),
        EndpointCondition::UpperBounded(ub) => {
            let gap = traj.values()[[n, component]] - ub;
            (gap * residual, gap.max(0.0))
        }
        EndpointCondition::Fixed(_) => unreachable!(),
    };
    Ok(TransversalityReport {
        residual,
        complementarity,
        feasibility,
        raw_endpoint_value,
    })
}

/// Augmented integrand `F = L − Σ λ_j G^j` for an all-isoperimetric
/// constraint list (the equality-constrained sign convention,
/// [`SignConvention::ObjectiveMinusLambdaG`]). Multiplier values are baked
/// into the returned expression as constants.
pub fn augment_isoperimetric(
    problem: &ProblemSpec,
    objective_index: usize,
    multipliers: &[f64],
) -> Result<LagrangianExpr> {
    if problem
        .constraints()
        .iter()
        .any(|c| !c.kind.is_isoperimetric())
    {
        return Err(Error::Invalid(
            "augment_isoperimetric requires all constraints to be isoperimetric".into(),
        ));
    }
    if multipliers.len() != problem.constraints().len() {
        return Err(Error::Dimension(format!(
            "{} multipliers for {} constraints",
            multipliers.len(),
            problem.constraints().len()
        )));
    }
    let terms: Vec<(f64, &LagrangianExpr)> = multipliers
        .iter()
        .zip(problem.constraints())
        .map(|(&lambda, c)| (lambda, &c.integrand))
        .collect();
    problem.objective(objective_index).subtract_scaled(&terms)
}

/// Residuals of the pointwise-constraint multiplier system.
#[derive(Debug, Clone)]
pub struct PointwiseReport {
    /// Euler-Lagrange residual of `F = L + Σ λ_j(x) (G^j [+ φ_j²])`.
    pub el_residual: Array2<f64>,
    /// `G^j[y](x)` (plus `φ_j²` for inequality kinds), `r × (n+1)`.
    pub constraint_residual: Array2<f64>,
    /// `λ_j(x)·φ_j(x)` for inequality kinds, zeros for equality kinds.
    pub complementarity: Array2<f64>,
    /// Sign convention in force (always `ObjectivePlusLambdaG` here).
    pub convention: SignConvention,
}

/// Assemble the multiplier-system residuals for pointwise (nonholonomic)
/// constraints along a trajectory.
pub fn pointwise_system_residual(
    problem: &ProblemSpec,
    traj: &Trajectory,
    multipliers: &MultiplierSet,
) -> Result<PointwiseReport> {
    check_compat(problem, traj)?;
    let constraints = problem.constraints();
    let r = constraints.len();
    let m = problem.n_components();
    if r == 0 || constraints.iter().any(|c| c.kind.is_isoperimetric()) {
        return Err(Error::Invalid(
            "pointwise_system_residual requires a non-empty all-pointwise constraint list".into(),
        ));
    }
    if r >= m {
        return Err(Error::Invalid(format!(
            "pointwise constraints require r < N, got r={r}, N={m}"
        )));
    }
    let (lambda, slacks) = match multipliers {
        MultiplierSet::Functions { lambda, slacks } => (lambda, slacks),
        MultiplierSet::Constants(_) => {
            return Err(Error::Invalid(
                "pointwise constraints take sampled multiplier functions, not constants".into(),
            ))
        }
    };
    let grid = traj.grid();
    let n = grid.n();
    if lambda.len() != r || lambda.iter().any(|l| l.len() != n + 1) {
        return Err(Error::Dimension(
            "need one multiplier sample vector per constraint, one value per node".into(),
        ));
    }
    if let Some(s) = slacks {
        if s.len() != r || s.iter().any(|v| v.len() != n + 1) {
            return Err(Error::Dimension(
                "slack vectors must match the constraint list and grid".into(),
            ));
        }
    }
    let needs_slack = constraints
        .iter()
        .any(|c| c.kind == ConstraintKind::PointwiseIneq);
    if needs_slack && slacks.is_none() {
        return Err(Error::Invalid(
            "inequality pointwise constraints require slack functions".into(),
        ));
    }

    let v = combined_derivatives(problem, traj)?;
    let objective = problem.objective(0);
    let params: Vec<f64> = vec![];

    // gY/gV of F(x) = L + Σ λ_j(x) G^j; the slack squares carry no (y, v)
    // dependence and drop out of these partials
    let mut g_y = Array2::zeros((n + 1, m));
    let mut g_v = Array2::zeros((n + 1, m));
    let mut constraint_residual = Array2::zeros((r, n + 1));
    let mut complementarity = Array2::zeros((r, n + 1));
    let mut args = Vec::with_capacity(objective.arity());
    for k in 0..=n {
        node_args(traj, &v, &params, k, &mut args);
        for i in 0..m {
            g_y[[k, i]] = objective.partial(&args, 1 + i)?;
            g_v[[k, i]] = objective.partial(&args, 1 + m + i)?;
        }
        for (j, c) in constraints.iter().enumerate() {
            let lam = lambda[j][k];
            for i in 0..m {
                g_y[[k, i]] += lam * c.integrand.partial(&args, 1 + i)?;
                g_v[[k, i]] += lam * c.integrand.partial(&args, 1 + m + i)?;
            }
            let mut cr = c.integrand.eval(&args)?;
            if c.kind == ConstraintKind::PointwiseIneq {
                let phi = slacks.as_ref().unwrap()[j][k];
                cr += phi * phi;
                complementarity[[j, k]] = lam * phi;
            }
            constraint_residual[[j, k]] = cr;
        }
    }

    let mut el_residual = Array2::zeros((n + 1, m));
    for i in 0..m {
        let o = problem.orders();
        let dual = dual_combined_rl(grid, o.alpha(i), o.beta(i), o.gamma(i))?;
        let applied = dual.apply(&g_v.column(i).to_vec())?;
        for k in 0..=n {
            el_residual[[k, i]] = g_y[[k, i]] + applied[k];
        }
    }
    Ok(PointwiseReport {
        el_residual,
        constraint_residual,
        complementarity,
        convention: SignConvention::ObjectivePlusLambdaG,
    })
}

/// Report of a sampled joint-convexity check.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityReport {
    /// Sample pairs violating the gradient inequality by more than 1e-9.
    pub violations: usize,
    /// Most negative observed gap `f(Q) − f(P) − ∇f(P)·(Q − P)` (0 when
    /// every sample satisfied the inequality).
    pub worst_gap: f64,
    /// Number of valid sample pairs evaluated.
    pub samples: usize,
}

/// Sampled certificate of joint convexity of `f(x, y, v)` in `(y, v)`.
///
/// Draws `samples` pairs of points `P, Q` inside `bounds` (one `(lo, hi)`
/// interval per `y` slot followed by one per `v` slot) with a shared
/// `x ∈ x_range`, and checks the subgradient inequality
/// `f(Q) − f(P) ≥ ∇f(P)·(Q−P)` with slack `−1e-9`. Sampling is
/// deterministic. Pairs where evaluation leaves the expression's domain
/// are skipped.
pub fn convexity_certificate(
    expr: &LagrangianExpr,
    x_range: (f64, f64),
    bounds: &[(f64, f64)],
    params: &[f64],
    samples: usize,
) -> Result<ConvexityReport> {
    if samples == 0 {
        return Err(Error::Invalid("samples must be at least 1".into()));
    }
    let m = expr.n_components();
    if bounds.len() != 2 * m {
        return Err(Error::Dimension(format!(
            "need 2N = {} bound intervals, got {}",
            2 * m,
            bounds.len()
        )));
    }
    if params.len() != expr.n_params() {
        return Err(Error::Arity {
            expected: expr.n_params(),
            got: params.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6672_6163);
    let draw_point = |rng: &mut ChaCha8Rng, x: f64| -> Vec<f64> {
        let mut args = Vec::with_capacity(expr.arity());
        args.push(x);
        for &(lo, hi) in bounds {
            args.push(rng.random_range(lo..=hi));
        }
        args.extend_from_slice(params);
        args
    };

    let mut violations = 0usize;
    let mut worst_gap = 0.0f64;
    let mut valid = 0usize;
    let mut attempts = 0usize;
    while valid < samples && attempts < samples.saturating_mul(20) {
        attempts += 1;
        let x = rng.random_range(x_range.0..=x_range.1);
        let p = draw_point(&mut rng, x);
        let q = draw_point(&mut rng, x);
        let (fp, fq) = match (expr.eval(&p), expr.eval(&q)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let mut dot = 0.0;
        let mut ok = true;
        for slot in 1..=2 * m {
            match expr.partial(&p, slot) {
                Ok(g) => dot += g * (q[slot] - p[slot]),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        valid += 1;
        let gap = fq - fp - dot;
        if gap < -1e-9 {
            violations += 1;
            worst_gap = worst_gap.min(gap);
        }
    }
    if valid < samples {
        return Err(Error::Domain(format!(
            "could not draw {samples} in-domain sample pairs (got {valid})"
        )));
    }
    Ok(ConvexityReport {
        violations,
        worst_gap,
        samples: valid,
    })
}

/// Rank diagnostic for the isoperimetric regularity hypothesis.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// Singular values of the `r × r` first-variation matrix, descending.
    pub singular_values: Vec<f64>,
    /// Count of singular values above `1e-8 · max`.
    pub rank: usize,
}

/// Estimate the matrix `a_kl = δG^k(y; h^l)` with coordinate-bump
/// variations `h^l` (unit hats at evenly spread interior nodes, cycling
/// through components) and report its numerical rank.
pub fn isoperimetric_regularity(
    problem: &ProblemSpec,
    traj: &Trajectory,
) -> Result<RegularityReport> {
    check_compat(problem, traj)?;
    let constraints = problem.constraints();
    let r = constraints.len();
    if r == 0 || constraints.iter().any(|c| !c.kind.is_isoperimetric()) {
        return Err(Error::Invalid(
            "regularity diagnostic requires a non-empty all-isoperimetric constraint list".into(),
        ));
    }
    let m = problem.n_components();
    let n = traj.grid().n();
    let functional = |values: &Array2<f64>, j: usize| -> Result<f64> {
        let t = Trajectory::new(traj.grid().clone(), values.clone())?;
        let v = combined_derivatives(problem, &t)?;
        let mut samples = vec![0.0; n + 1];
        let mut args = Vec::new();
        for k in 0..=n {
            node_args(&t, &v, &[], k, &mut args);
            samples[k] = constraints[j].integrand.eval(&args)?;
        }
        trapezoid_quadrature(traj.grid(), &samples)
    };

    let eps = 1e-5;
    let mut a = vec![vec![0.0; r]; r];
    for l in 0..r {
        let comp = l % m;
        let node = ((l / m + 1) * n / (r / m + 2)).clamp(1, n - 1);
        let mut plus = traj.values().clone();
        let mut minus = traj.values().clone();
        plus[[node, comp]] += eps;
        minus[[node, comp]] -= eps;
        for k in 0..r {
            a[k][l] = (functional(&plus, k)? - functional(&minus, k)?) / (2.0 * eps);
        }
    }

    // singular values via Jacobi eigenvalues of AᵀA (r is tiny)
    let mut ata = vec![vec![0.0; r]; r];
    for i in 0..r {
        for j in 0..r {
            ata[i][j] = (0..r).map(|k| a[k][i] * a[k][j]).sum();
        }
    }
    let eigs = jacobi_eigenvalues(&mut ata);
    let mut singular_values: Vec<f64> = eigs.into_iter().map(|e| e.max(0.0).sqrt()).collect();
    singular_values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let top = singular_values.first().copied().unwrap_or(0.0);
    let rank = singular_values.iter().filter(|&&s| s > 1e-8 * top).count();
    Ok(RegularityReport {
        singular_values,
        rank,
    })
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(a: &mut [Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    if n == 1 {
        return vec![a[0][0]];
    }
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}
