//! Problem descriptions: boundary conditions, constraints, and the full
//! variational problem specification shared by the residual, solver, and
//! Pareto layers.

use crate::error::{Error, Result};
use crate::expr::LagrangianExpr;
use crate::fracops::FracOrders;

/// Condition on one endpoint of one trajectory component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndpointCondition {
    /// `y_i(endpoint) = value`.
    Fixed(f64),
    /// No condition; the natural (transversality) condition applies.
    Free,
    /// `y_i(endpoint) <= bound`.
    UpperBounded(f64),
}

impl EndpointCondition {
    pub fn is_fixed(&self) -> bool {
        matches!(self, EndpointCondition::Fixed(_))
    }
}

/// Per-component endpoint conditions. At least one endpoint of every
/// component must be `Fixed` or `UpperBounded`, which rules out fully
/// unconstrained components.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    left: Vec<EndpointCondition>,
    right: Vec<EndpointCondition>,
}

impl BoundarySpec {
    pub fn new(
        left: Vec<EndpointCondition>,
        right: Vec<EndpointCondition>,
    ) -> Result<BoundarySpec> {
        if left.is_empty() || left.len() != right.len() {
            return Err(Error::Dimension(
                "boundary conditions must cover every component on both endpoints".into(),
            ));
        }
        for (i, (l, r)) in left.iter().zip(&right).enumerate() {
            let anchored = |c: &EndpointCondition| !matches!(c, EndpointCondition::Free);
            if !anchored(l) && !anchored(r) {
                return Err(Error::Invalid(format!(
                    "component {} has no fixed or bounded endpoint",
                    i + 1
                )));
            }
        }
        Ok(BoundarySpec { left, right })
    }

    /// Both endpoints fixed, one component.
    pub fn fixed_scalar(ya: f64, yb: f64) -> BoundarySpec {
        BoundarySpec {
            left: vec![EndpointCondition::Fixed(ya)],
            right: vec![EndpointCondition::Fixed(yb)],
        }
    }

    pub fn n_components(&self) -> usize {
        self.left.len()
    }
    pub fn left(&self, i: usize) -> EndpointCondition {
        self.left[i]
    }
    pub fn right(&self, i: usize) -> EndpointCondition {
        self.right[i]
    }
}

/// Kind of trajectory constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `∫ G[y] dx = target`.
    IsoperimetricEq,
    /// `∫ G[y] dx <= target`.
    IsoperimetricIneq,
    /// `G[y](x) = 0` at every point.
    PointwiseEq,
    /// `G[y](x) <= 0` at every point.
    PointwiseIneq,
}

impl ConstraintKind {
    pub fn is_isoperimetric(&self) -> bool {
        matches!(
            self,
            ConstraintKind::IsoperimetricEq | ConstraintKind::IsoperimetricIneq
        )
    }
    pub fn is_inequality(&self) -> bool {
        matches!(
            self,
            ConstraintKind::IsoperimetricIneq | ConstraintKind::PointwiseIneq
        )
    }
}

/// One constraint: a kind, its integrand `G`, and (for isoperimetric kinds)
/// the target value `l_j`.
#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub integrand: LagrangianExpr,
    pub target: Option<f64>,
}

impl ConstraintSpec {
    pub fn isoperimetric_eq(integrand: LagrangianExpr, target: f64) -> ConstraintSpec {
        ConstraintSpec {
            kind: ConstraintKind::IsoperimetricEq,
            integrand,
            target: Some(target),
        }
    }
    pub fn isoperimetric_ineq(integrand: LagrangianExpr, target: f64) -> ConstraintSpec {
        ConstraintSpec {
            kind: ConstraintKind::IsoperimetricIneq,
            integrand,
            target: Some(target),
        }
    }
    pub fn pointwise_eq(integrand: LagrangianExpr) -> ConstraintSpec {
        ConstraintSpec {
            kind: ConstraintKind::PointwiseEq,
            integrand,
            target: None,
        }
    }
    pub fn pointwise_ineq(integrand: LagrangianExpr) -> ConstraintSpec {
        ConstraintSpec {
            kind: ConstraintKind::PointwiseIneq,
            integrand,
            target: None,
        }
    }
}

/// A complete fractional variational problem: interval, orders, one or more
/// objective integrands, boundary conditions, and constraints.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    a: f64,
    b: f64,
    orders: FracOrders,
    objectives: Vec<LagrangianExpr>,
    boundary: BoundarySpec,
    constraints: Vec<ConstraintSpec>,
}

impl ProblemSpec {
    pub fn new(
        a: f64,
        b: f64,
        orders: FracOrders,
        objectives: Vec<LagrangianExpr>,
        boundary: BoundarySpec,
        constraints: Vec<ConstraintSpec>,
    ) -> Result<ProblemSpec> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::Invalid(format!(
                "problem interval requires b > a, got [{a}, {b}]"
            )));
        }
        if objectives.is_empty() {
            return Err(Error::Invalid(
                "problem needs at least one objective".into(),
            ));
        }
        let n = orders.n_components();
        if boundary.n_components() != n {
            return Err(Error::Dimension(format!(
                "boundary covers {} components, orders cover {n}",
                boundary.n_components()
            )));
        }
        let n_params = objectives[0].n_params();
        for (k, obj) in objectives.iter().enumerate() {
            if obj.n_components() != n || obj.n_params() != n_params {
                return Err(Error::Dimension(format!(
                    "objective {} has shape ({}, {}), expected ({n}, {n_params})",
                    k + 1,
                    obj.n_components(),
                    obj.n_params()
                )));
            }
        }
        let n_pointwise = constraints
            .iter()
            .filter(|c| !c.kind.is_isoperimetric())
            .count();
        if n_pointwise > 0 && n_pointwise >= n {
            return Err(Error::Invalid(format!(
                "pointwise constraints require r < N, got r={n_pointwise}, N={n}"
            )));
        }
        for (j, c) in constraints.iter().enumerate() {
            if c.integrand.n_components() != n {
                return Err(Error::Dimension(format!(
                    "constraint {} is over {} components, expected {n}",
                    j + 1,
                    c.integrand.n_components()
                )));
            }
            if c.kind.is_isoperimetric() {
                match c.target {
                    Some(t) if t.is_finite() => {}
                    _ => {
                        return Err(Error::Invalid(format!(
                            "isoperimetric constraint {} needs a finite target",
                            j + 1
                        )))
                    }
                }
            }
        }
        Ok(ProblemSpec {
            a,
            b,
            orders,
            objectives,
            boundary,
            constraints,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn orders(&self) -> &FracOrders {
        &self.orders
    }
    /// Number of trajectory components N.
    pub fn n_components(&self) -> usize {
        self.orders.n_components()
    }
    /// Number of objectives d.
    pub fn n_objectives(&self) -> usize {
        self.objectives.len()
    }
    pub fn objective(&self, k: usize) -> &LagrangianExpr {
        &self.objectives[k]
    }
    pub fn objectives(&self) -> &[LagrangianExpr] {
        &self.objectives
    }
    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }
    pub fn constraints(&self) -> &[ConstraintSpec] {
        &self.constraints
    }

    /// Same problem with the objective list replaced (used by the weighted
    /// scalarization and the ε-constraint machinery).
    pub fn with_objectives(&self, objectives: Vec<LagrangianExpr>) -> Result<ProblemSpec> {
        ProblemSpec::new(
            self.a,
            self.b,
            self.orders.clone(),
            objectives,
            self.boundary.clone(),
            self.constraints.clone(),
        )
    }

    /// Same problem with the constraint list replaced.
    pub fn with_constraints(&self, constraints: Vec<ConstraintSpec>) -> Result<ProblemSpec> {
        ProblemSpec::new(
            self.a,
            self.b,
            self.orders.clone(),
            self.objectives.clone(),
            self.boundary.clone(),
            constraints,
        )
    }
}
