//! Numerical solver for the iterative functional equation
//! `phi(phi(x)) = h(phi(f(x))) + g(x)`.
//!
//! The crate is `no_std` and needs only `alloc`. It contains
//!
//! * [`expr`]: the expression language for `h`, `f`, `g` and their derivatives,
//! * [`gridfn`]: piecewise-linear grid functions with exact sup norms,
//! * [`inverse`]: inversion of monotone maps,
//! * [`conditions`]: the solvability conditions and the choice of `L`, `rho`,
//! * [`solver`]: the base/fiber iteration,
//! * [`verify`]: residual and derivative checks of a computed solution.
#![no_std]
// `!(a < b)` is used on purpose so that NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod conditions;
pub mod expr;
pub mod gridfn;
pub mod inverse;
pub mod solver;
pub mod verify;

pub use conditions::{
    choose_parameters, estimate_constants, validate, Case, ConditionError, ConditionReport,
    Constants, ConstantsProvenance, Policy,
};
pub use expr::{differentiate, parse_expr, Expr};
pub use gridfn::{make_grid, sup_dist, Grid, GridFunction};
pub use inverse::MonotoneMap;
pub use solver::{
    apply_lambda, apply_psi, default_interval, iterate_fiber, IterationOptions, IterationTrace,
    Operators, ProblemSpec, SolutionPair, SolveError,
};
pub use verify::{
    derivative_consistency, observed_contraction_ratio, residual, VerificationReport,
};
