//! Checks of a candidate solution that do not go through the solver.
//!
//! The residual evaluates the original equation with forward evaluations
//! of `h`, `f` and `g` only, never an inverse.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::EvalError;
use crate::gridfn::GridFunction;
use crate::solver::{IterationTrace, ProblemSpec, SolutionPair};

/// Deltas below this are at the rounding floor and are not used for ratios.
pub const RATIO_FLOOR: f64 = 100.0 * f64::EPSILON;
pub const DEFAULT_BURN_IN: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum VerifyError {
    InsufficientTrace {
        steps: usize,
        needed: usize,
    },
    /// Finite-difference step smaller than twice the grid spacing.
    StepBelowResolution {
        step: f64,
        spacing: f64,
    },
    TooFewCheckPoints(usize),
    Eval {
        function: &'static str,
        x: f64,
        source: EvalError,
    },
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyError::InsufficientTrace { steps, needed } => {
                write!(f, "trace has {steps} steps, need at least {needed}")
            }
            VerifyError::StepBelowResolution { step, spacing } => write!(
                f,
                "difference step {step} is below twice the grid spacing {spacing}"
            ),
            VerifyError::TooFewCheckPoints(n) => write!(f, "need at least 2 check points, got {n}"),
            VerifyError::Eval {
                function,
                x,
                source,
            } => {
                write!(f, "evaluating {function} at x = {x}: {source}")
            }
        }
    }
}

impl core::error::Error for VerifyError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub sup: f64,
    pub argmax: f64,
    /// Check points that passed the window filter.
    pub points: usize,
}

/// `sup |phi(phi(x)) - h(phi(f(x))) - g(x)|` over `n_check` uniform points of
/// `[-A/2, A/2]`, keeping only points with `|f(x)| <= A`.
///
/// Outside `[-A, A]` the grid function is only its constant extension, so
/// points whose image under `f` leaves the window say nothing about the
/// computed solution and are skipped.
pub fn residual(
    phi: &GridFunction,
    p: &ProblemSpec,
    n_check: usize,
) -> Result<Residual, VerifyError> {
    if n_check < 2 {
        return Err(VerifyError::TooFewCheckPoints(n_check));
    }
    let a = p.interval_halfwidth;
    let half = 0.5 * a;
    let m = (n_check - 1) as f64;
    let ev = |function: &'static str, e: &crate::expr::Expr, x: f64| {
        e.eval(x).map_err(|source| VerifyError::Eval {
            function,
            x,
            source,
        })
    };
    let mut out = Residual {
        sup: 0.0,
        argmax: 0.0,
        points: 0,
    };
    for i in 0..n_check {
        let x = half * ((2 * i) as f64 - m) / m;
        let fx = ev("f", &p.f, x)?;
        if fx.abs() > a {
            continue;
        }
        let lhs = phi.eval(phi.eval(x));
        let rhs = ev("h", &p.h, phi.eval(fx))? + ev("g", &p.g, x)?;
        let r = (lhs - rhs).abs();
        if out.points == 0 || r > out.sup {
            out.sup = r;
            out.argmax = x;
        }
        out.points += 1;
    }
    Ok(out)
}

/// `max |(phi(x + s) - phi(x - s))/(2 s) - Phi(x)|` over the nodes of `phi`
/// whose stencil stays inside the grid.
pub fn derivative_consistency(
    phi: &GridFunction,
    deriv: &GridFunction,
    step: f64,
) -> Result<f64, VerifyError> {
    let spacing = phi.grid().max_spacing();
    if !(step >= 2.0 * spacing) {
        return Err(VerifyError::StepBelowResolution { step, spacing });
    }
    let (lo, hi) = (phi.grid().lower(), phi.grid().upper());
    Ok(phi
        .nodes()
        .iter()
        .filter(|&&x| x - step >= lo && x + step <= hi)
        .fold(0.0, |m: f64, &x| {
            let fd = (phi.eval(x + step) - phi.eval(x - step)) / (2.0 * step);
            m.max((fd - deriv.eval(x)).abs())
        }))
}

/// Largest ratio of successive deltas after `burn_in`.
///
/// Ratios whose denominator is below [`RATIO_FLOOR`] are skipped.
pub fn contraction_ratio(deltas: &[f64], burn_in: usize) -> Result<f64, VerifyError> {
    let needed = burn_in + 3;
    if deltas.len() < needed {
        return Err(VerifyError::InsufficientTrace {
            steps: deltas.len(),
            needed,
        });
    }
    Ok(deltas[burn_in..]
        .windows(2)
        .filter(|w| w[0] >= RATIO_FLOOR)
        .fold(0.0, |m: f64, w| m.max(w[1] / w[0])))
}

/// [`contraction_ratio`] of the `phi` deltas of a trace.
pub fn observed_contraction_ratio(t: &IterationTrace, burn_in: usize) -> Result<f64, VerifyError> {
    contraction_ratio(&t.phi_deltas(), burn_in)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub residual_sup: f64,
    pub residual_argmax: f64,
    pub residual_points: usize,
    pub derivative_mismatch_sup: f64,
    pub difference_step: f64,
    pub lipschitz_of_solution: f64,
    pub derivative_bound: f64,
    pub observed_ratio: f64,
    pub ratio_burn_in: usize,
    pub theoretical_factor: f64,
}

/// Runs every check on a solution.
///
/// The difference step is ten grid spacings. Short traces use the largest
/// burn-in they allow; traces under three steps report a ratio of 0.
pub fn verify_solution(
    sol: &SolutionPair,
    p: &ProblemSpec,
    n_check: usize,
) -> Result<VerificationReport, VerifyError> {
    let r = residual(&sol.phi, p, n_check)?;
    let step = 10.0 * sol.phi.grid().max_spacing();
    let mismatch = derivative_consistency(&sol.phi, &sol.deriv, step)?;
    let len = sol.trace.steps.len();
    let burn_in = DEFAULT_BURN_IN.min(len.saturating_sub(3));
    let observed_ratio = if len >= 3 {
        observed_contraction_ratio(&sol.trace, burn_in)?
    } else {
        0.0
    };
    Ok(VerificationReport {
        residual_sup: r.sup,
        residual_argmax: r.argmax,
        residual_points: r.points,
        derivative_mismatch_sup: mismatch,
        difference_step: step,
        lipschitz_of_solution: sol.phi.lipschitz(),
        derivative_bound: sol.deriv.bound(),
        observed_ratio,
        ratio_burn_in: burn_in,
        theoretical_factor: sol.report.theoretical_factor(),
    })
}
