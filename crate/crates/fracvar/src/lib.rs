//! Numerical fractional variational calculus built on the combined Caputo
//! derivative `γ·(left Caputo of order α) + (1−γ)·(right Caputo of order β)`.
//!
//! The crate discretizes fractional operators on uniform grids as dense
//! triangular matrices, evaluates Euler-Lagrange / transversality /
//! multiplier conditions as residuals, solves basic, free-endpoint, and
//! isoperimetric variational problems by direct minimization with exact
//! discrete gradients, and traces Pareto fronts of multiobjective problems
//! via weighted-sum sweeps with ε-constraint cross-checks.
//!
//! # Where to start
//!
//! The `examples/` directory holds one runnable demo per capability:
//!
//! | example | shows |
//! |---------|-------|
//! | `operator_convergence` | L1 Caputo matrix vs closed form |
//! | `mittag_leffler_fixed_point` | `ᶜD^α E_α(x^α) = E_α(x^α)` |
//! | `integration_by_parts` | the discrete integration-by-parts residual |
//! | `expression_dsl` | the integrand language and exact partials |
//! | `classical_limit` | direct solves approaching the α → 1 limit |
//! | `free_endpoint` | transversality at free and bounded endpoints |
//! | `isoperimetric_multiplier` | augmented-Lagrangian recovery of λ = 1/2 |
//! | `pareto_front` | weight sweeps, dominance, ε-constraint probes |
//! | `convexity_check` | sampled joint-convexity certificates |
//!
//! A thin `fracvar` binary exposes the same capabilities as `deriv`,
//! `solve`, `pareto`, and `verify` subcommands over a line-oriented
//! problem-file format; see [`cli`].

// index-synchronized loops over multiple arrays dominate the matrix
// assembly code and read better than iterator chains there
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod expr;
pub mod fracops;
pub mod pareto;
pub mod problem;
pub mod solver;
pub mod specfun;
pub mod variational;

pub use error::{Error, Result};
