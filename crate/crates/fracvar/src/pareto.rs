//! Multiobjective layer: weighted-sum scalarization, weight sweeps,
//! dominance filtering, and ε-constraint verification.
//!
//! Positive-weight scalarization returns Pareto optimal solutions; the
//! ε-constraint subproblems (minimize one objective subject to the others
//! not worsening) characterize Pareto optimality exactly at global optima.
//! With local solves, a clean ε-constraint report is evidence of Pareto
//! optimality, not proof.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::LagrangianExpr;
use crate::fracops::Grid;
use crate::problem::{ConstraintSpec, ProblemSpec};
use crate::solver::{
    discretize_expression, operator_stack, solve, solve_isoperimetric_from, SolveOptions,
    SolveResult,
};

/// Normalized scalarization weights: nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    /// Normalize a nonnegative vector onto the unit simplex.
    pub fn new(raw: Vec<f64>) -> Result<WeightVector> {
        if raw.is_empty() {
            return Err(Error::Invalid("weight vector cannot be empty".into()));
        }
        if raw.iter().any(|&w| !w.is_finite() || w < -1e-12) {
            return Err(Error::Invalid(format!(
                "weights must be nonnegative: {raw:?}"
            )));
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 1e-12 {
            return Err(Error::Invalid("weights must not all vanish".into()));
        }
        Ok(WeightVector {
            w: raw.into_iter().map(|w| w.max(0.0) / sum).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }
    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
    pub fn components(&self) -> &[f64] {
        &self.w
    }
    pub fn is_strictly_positive(&self) -> bool {
        self.w.iter().all(|&w| w > 0.0)
    }
}

/// One sweep sample: the weights, the objective vector recomputed on the
/// common grid, and the solve behind them.
#[derive(Debug, Clone)]
pub struct ParetoPoint {
    pub weight: WeightVector,
    pub objectives: Vec<f64>,
    pub result: SolveResult,
}

/// Scalarized integrand `Σ w_i L^i` for a multiobjective problem.
pub fn weighted_objective(problem: &ProblemSpec, w: &WeightVector) -> Result<LagrangianExpr> {
    let d = problem.n_objectives();
    if d < 2 {
        return Err(Error::Invalid(format!(
            "weighted scalarization needs d >= 2 objectives, got {d}"
        )));
    }
    if w.len() != d {
        return Err(Error::Dimension(format!(
            "{} weights for {d} objectives",
            w.len()
        )));
    }
    let terms: Vec<(f64, &LagrangianExpr)> = w
        .components()
        .iter()
        .zip(problem.objectives())
        .map(|(&wi, li)| (wi, li))
        .collect();
    LagrangianExpr::linear_combination(&terms)
}

/// Deterministic weight grid: uniform 1D grid for `d = 2`, the simplex
/// lattice `{k/m}` for `d >= 3`. `count` is the number of 1D samples for
/// `d = 2`, the lattice resolution `m` otherwise.
pub fn uniform_weight_grid(d: usize, count: usize) -> Result<Vec<WeightVector>> {
    if d < 2 {
        return Err(Error::Invalid("weight grids need d >= 2".into()));
    }
    if count == 0 {
        return Err(Error::Invalid(
            "weight grid needs at least one sample".into(),
        ));
    }
    if d == 2 {
        if count == 1 {
            // a single-sample sweep degenerates to the first objective
            return Ok(vec![WeightVector::new(vec![1.0, 0.0])?]);
        }
        return (0..count)
            .map(|i| {
                let w = i as f64 / (count - 1) as f64;
                WeightVector::new(vec![w, 1.0 - w])
            })
            .collect();
    }
    // all lattice points k/m with Σk = m
    let m = count;
    let mut out = Vec::new();
    let mut stack = vec![0usize; d];
    fn recurse(
        slot: usize,
        remaining: usize,
        d: usize,
        m: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<WeightVector>,
    ) {
        if slot == d - 1 {
            stack[slot] = remaining;
            let w: Vec<f64> = stack.iter().map(|&k| k as f64 / m as f64).collect();
            out.push(WeightVector::new(w).expect("lattice weights are valid"));
            return;
        }
        for k in 0..=remaining {
            stack[slot] = k;
            recurse(slot + 1, remaining - k, d, m, stack, out);
        }
    }
    recurse(0, m, d, m, &mut stack, &mut out);
    Ok(out)
}

/// Objective values of a trajectory on the common grid, recomputed from
/// scratch (never trusted from the inner solve).
pub fn objective_vector(
    problem: &ProblemSpec,
    grid: &Grid,
    result: &SolveResult,
) -> Result<Vec<f64>> {
    let mats = operator_stack(problem, grid)?;
    problem
        .objectives()
        .iter()
        .map(|l| {
            discretize_expression(problem, l.clone(), grid, mats.clone(), false)?
                .value(result.trajectory.values())
        })
        .collect()
}

/// Solve the scalarized problem once per weight vector. Solves run in
/// parallel; results are returned in weight order, each flagged with its
/// own convergence status.
pub fn pareto_sweep(
    problem: &ProblemSpec,
    weights: &[WeightVector],
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<Vec<ParetoPoint>> {
    if weights.is_empty() {
        return Err(Error::Invalid(
            "pareto sweep needs at least one weight".into(),
        ));
    }
    weights
        .par_iter()
        .map(|w| -> Result<ParetoPoint> {
            let combo = weighted_objective(problem, w)?;
            let scalar = problem.with_objectives(vec![combo])?;
            let result = solve(&scalar, grid, opts)?;
            let objectives = objective_vector(problem, grid, &result)?;
            Ok(ParetoPoint {
                weight: w.clone(),
                objectives,
                result,
            })
        })
        .collect()
}

/// Remove every point dominated by another point in the list: `z` dominates
/// `y` when `J_i(z) <= J_i(y) + tol` for all `i` and `J_i(z) < J_i(y) - tol`
/// for at least one `i`. Order is preserved; ties (identical vectors within
/// tolerance) are all retained.
pub fn dominance_filter(points: &[ParetoPoint], tol: f64) -> Vec<ParetoPoint> {
    points
        .iter()
        .filter(|y| {
            !points.iter().any(|z| {
                !std::ptr::eq(*y, z)
                    && z.objectives
                        .iter()
                        .zip(&y.objectives)
                        .all(|(a, b)| *a <= *b + tol)
                    && z.objectives
                        .iter()
                        .zip(&y.objectives)
                        .any(|(a, b)| *a < *b - tol)
            })
        })
        .cloned()
        .collect()
}

/// Outcome of one ε-constraint probe.
#[derive(Debug, Clone)]
pub struct EpsilonConstraintReport {
    /// A feasible trajectory improved objective `i` by more than
    /// `10 × constraint_tol`.
    pub improved: bool,
    /// `max(0, J_i(candidate) − J_i(probe))` over feasible probes.
    pub improvement: f64,
    /// Whether the probe solve itself converged.
    pub solver_converged: bool,
    /// Objective vector of the probe trajectory.
    pub probe_objectives: Vec<f64>,
}

/// Try to improve objective `i` of a candidate while keeping every other
/// objective at or below the candidate's own value (the ε-constraint
/// subproblem, solved as an inequality-isoperimetric problem warm-started
/// at the candidate). Pareto candidates must report `improved = false` for
/// every `i`.
pub fn epsilon_constraint_check(
    problem: &ProblemSpec,
    candidate: &ParetoPoint,
    objective_index: usize,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<EpsilonConstraintReport> {
    let d = problem.n_objectives();
    if d < 2 {
        return Err(Error::Invalid(
            "epsilon-constraint verification is multiobjective only (d >= 2)".into(),
        ));
    }
    if objective_index >= d {
        return Err(Error::Invalid(format!(
            "objective index {objective_index} out of range (d = {d})"
        )));
    }
    if candidate.objectives.len() != d {
        return Err(Error::Dimension(
            "candidate objective vector does not match the problem".into(),
        ));
    }
    if candidate.result.trajectory.grid().n() != grid.n() {
        return Err(Error::Dimension(
            "candidate was solved on a different grid".into(),
        ));
    }

    // probes only need enough outer iterations to settle feasibility; the
    // tightened re-solve below may even chase an unattainable bound
    let probe_opts = SolveOptions {
        al_outer_iters: opts.al_outer_iters.min(8),
        ..opts.clone()
    };
    let probe = |bounds: &[f64],
                 start: &crate::fracops::Trajectory|
     -> Result<(Vec<f64>, bool, crate::solver::SolveResult)> {
        let mut constraints: Vec<ConstraintSpec> = problem.constraints().to_vec();
        for j in 0..d {
            if j != objective_index {
                constraints.push(ConstraintSpec::isoperimetric_ineq(
                    problem.objective(j).clone(),
                    bounds[j],
                ));
            }
        }
        let scalar = problem
            .with_objectives(vec![problem.objective(objective_index).clone()])?
            .with_constraints(constraints)?;
        let result = solve_isoperimetric_from(&scalar, grid, &probe_opts, start)?;
        let objectives = objective_vector(problem, grid, &result)?;
        let converged = result.converged;
        Ok((objectives, converged, result))
    };

    // A certificate of improvement must be feasible in the strict sense:
    // an ε-bound violated even by solver noise buys a spurious
    // O(sqrt(noise)) objective gain near the ends of the front. Bounds are
    // exact (never relaxed); when the first probe overshoots them, one
    // tightened re-solve pulls it back to the feasible side.
    let feas_eps: Vec<f64> = candidate
        .objectives
        .iter()
        .map(|&v| 1e-12 * (1.0 + v.abs()))
        .collect();
    let strictly_feasible = |objs: &[f64]| -> bool {
        objs.iter()
            .enumerate()
            .all(|(j, &v)| j == objective_index || v <= candidate.objectives[j] + feas_eps[j])
    };

    let (mut probe_objectives, mut solver_converged, first_result) =
        probe(&candidate.objectives, &candidate.result.trajectory)?;
    if !strictly_feasible(&probe_objectives) {
        let tightened: Vec<f64> = candidate
            .objectives
            .iter()
            .zip(&probe_objectives)
            .enumerate()
            .map(|(j, (&bound, &got))| {
                if j == objective_index {
                    bound
                } else {
                    bound - 2.0 * (got - bound).max(0.0)
                }
            })
            .collect();
        let (objs, conv, _) = probe(&tightened, &first_result.trajectory)?;
        probe_objectives = objs;
        solver_converged = conv;
    }

    let feasible = strictly_feasible(&probe_objectives);
    let gain = candidate.objectives[objective_index] - probe_objectives[objective_index];
    let improved = feasible && gain > 10.0 * opts.constraint_tol;
    Ok(EpsilonConstraintReport {
        improved,
        improvement: if feasible { gain.max(0.0) } else { 0.0 },
        solver_converged,
        probe_objectives,
    })
}
