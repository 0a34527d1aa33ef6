//! The fiber iteration.
//!
//! Writing the equation as `phi = h^{-1}(phi(phi(f^{-1}(x))) - g(f^{-1}(x)))`
//! gives the base map [`apply_lambda`]. Differentiating it formally gives
//! the fiber map [`apply_psi`], which acts on a candidate derivative `Phi`
//! and contracts uniformly in `Phi`. Iterating the pair
//! `(phi, Phi) -> (Lambda(phi), Psi(phi, Phi))` from a seed with
//! `Phi_0 = phi_0'` converges to a solution together with its derivative.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::conditions::{ConditionReport, Constants};
use crate::expr::{EvalError, Expr};
use crate::gridfn::{sup_dist, Grid, GridError, GridFunction};
use crate::inverse::{InverseError, MonotoneMap};
use crate::verify::{self, VerifyError};

pub const DEFAULT_GRID_N: usize = 4001;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_INVERSE_TOL: f64 = 1e-12;
/// Smallest interval half-width [`default_interval`] returns.
pub const MIN_INTERVAL: f64 = 10.0;
/// Relative slack allowed on the class constraints `Lip(phi) <= L`, `|Phi| <= rho`.
pub const MEMBERSHIP_SLACK: f64 = 1e-6;

const FLOOR_PROBE_POINTS: usize = 4001;

/// The functions of the equation plus the numerical settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub h: Expr,
    pub f: Expr,
    pub g: Expr,
    pub h_prime: Expr,
    pub f_prime: Expr,
    pub g_prime: Expr,
    pub constants: Constants,
    pub interval_halfwidth: f64,
    pub grid_n: usize,
    pub inverse_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    BadSettings(&'static str),
    Grid(GridError),
    Inverse {
        function: &'static str,
        source: InverseError,
    },
    Eval {
        function: &'static str,
        x: f64,
        source: EvalError,
    },
    /// An iterate left `C_b(L) x F_rho`; the discretization is too coarse.
    MembershipDrift {
        step: usize,
        lipschitz: f64,
        bound: f64,
        l: f64,
        rho: f64,
    },
    /// Not converged within `max_iter`; carries the last iterate and trace.
    MaxIterExceeded(Box<SolutionPair>),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::BadSettings(what) => write!(f, "invalid settings: {what}"),
            SolveError::Grid(e) => write!(f, "{e}"),
            SolveError::Inverse { function, source } => write!(f, "inverting {function}: {source}"),
            SolveError::Eval { function, x, source } => {
                write!(f, "evaluating {function} at x = {x}: {source}")
            }
            SolveError::MembershipDrift {
                step,
                lipschitz,
                bound,
                l,
                rho,
            } => write!(
                f,
                "iterate {step} left the admissible class: Lip = {lipschitz} (L = {l}), sup|Phi| = {bound} (rho = {rho})"
            ),
            SolveError::MaxIterExceeded(partial) => write!(
                f,
                "no convergence after {} iterations (last delta {})",
                partial.trace.steps.len(),
                partial.trace.last_delta()
            ),
        }
    }
}

impl core::error::Error for SolveError {}

impl From<VerifyError> for SolveError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Eval {
                function,
                x,
                source,
            } => SolveError::Eval {
                function,
                x,
                source,
            },
            _ => SolveError::BadSettings("residual check points"),
        }
    }
}

impl From<GridError> for SolveError {
    fn from(e: GridError) -> Self {
        SolveError::Grid(e)
    }
}

/// Source of wall-clock time for the trace.
pub trait Clock {
    /// Seconds since the clock was started.
    fn elapsed_seconds(&mut self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_seconds(&mut self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    pub delta_phi: f64,
    #[serde(rename = "delta_Phi")]
    pub delta_deriv: f64,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub steps: Vec<StepRecord>,
    pub stop: StopReason,
    /// `delta * q/(1 - q)` for the last step with `q` the larger factor;
    /// bounds the remaining error of `phi` only.
    pub error_bound: f64,
}

impl IterationTrace {
    pub fn last_delta(&self) -> f64 {
        self.steps
            .last()
            .map_or(f64::INFINITY, |s| s.delta_phi.max(s.delta_deriv))
    }

    pub fn phi_deltas(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.delta_phi).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    pub phi: GridFunction,
    /// Approximation of `phi'`.
    pub deriv: GridFunction,
    pub report: ConditionReport,
    pub trace: IterationTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Points used for the per-step residual; 0 disables it.
    pub residual_points: usize,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            residual_points: DEFAULT_GRID_N,
        }
    }
}

/// Per-node data that does not change between iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
struct NodeData {
    /// `f^{-1}(x)`
    u: f64,
    /// `(f^{-1})'(x) = 1/f'(u)`
    finv_slope: f64,
    g_u: f64,
    g_prime_u: f64,
}

/// The maps `Lambda` and `Psi` on a fixed grid.
///
/// `f^{-1}` and everything evaluated at it depend only on the grid node, so
/// they are computed once here and reused by every sweep.
#[derive(Debug, Clone)]
pub struct Operators {
    spec: ProblemSpec,
    grid: Grid,
    h_map: MonotoneMap,
    f_map: MonotoneMap,
    nodes: Vec<NodeData>,
}

impl Operators {
    pub fn new(spec: ProblemSpec) -> Result<Operators, SolveError> {
        if !(spec.inverse_tol > 0.0 && spec.inverse_tol.is_finite()) {
            return Err(SolveError::BadSettings(
                "inverse tolerance must be positive",
            ));
        }
        let grid = Grid::uniform(spec.interval_halfwidth, spec.grid_n)?;
        let probe = spec.interval_halfwidth.max(MIN_INTERVAL);
        let h_map = monotone(&spec.h, &spec.h_prime, spec.constants.k, probe, "h")?;
        let f_map = monotone(&spec.f, &spec.f_prime, spec.constants.alpha, probe, "f")?;
        let nodes =
            grid.nodes()
                .iter()
                .map(|&x| {
                    let u = f_map.invert(x, spec.inverse_tol).map_err(|source| {
                        SolveError::Inverse {
                            function: "f",
                            source,
                        }
                    })?;
                    let finv_slope =
                        f_map
                            .derivative_at_preimage(u)
                            .map_err(|source| SolveError::Inverse {
                                function: "f",
                                source,
                            })?;
                    let g_u = eval(&spec.g, "g", u)?;
                    let g_prime_u = eval(&spec.g_prime, "g'", u)?;
                    Ok(NodeData {
                        u,
                        finv_slope,
                        g_u,
                        g_prime_u,
                    })
                })
                .collect::<Result<Vec<_>, SolveError>>()?;
        Ok(Operators {
            spec,
            grid,
            h_map,
            f_map,
            nodes,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h_map(&self) -> &MonotoneMap {
        &self.h_map
    }

    pub fn f_map(&self) -> &MonotoneMap {
        &self.f_map
    }

    /// `phi(phi(u)) - g(u)` at node `i`, and `phi(u)`.
    fn inner(&self, phi: &GridFunction, i: usize) -> (f64, f64) {
        let d = &self.nodes[i];
        let a = phi.eval(d.u);
        (phi.eval(a) - d.g_u, a)
    }

    fn h_inverse(&self, v: f64) -> Result<f64, SolveError> {
        self.h_map
            .invert(v, self.spec.inverse_tol)
            .map_err(|source| SolveError::Inverse {
                function: "h",
                source,
            })
    }

    fn h_inverse_slope(&self, t: f64) -> Result<f64, SolveError> {
        self.h_map
            .derivative_at_preimage(t)
            .map_err(|source| SolveError::Inverse {
                function: "h",
                source,
            })
    }

    pub fn lambda(&self, phi: &GridFunction) -> Result<GridFunction, SolveError> {
        let values = (0..self.nodes.len())
            .map(|i| self.h_inverse(self.inner(phi, i).0))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GridFunction::new(self.grid.clone(), values)?)
    }

    pub fn psi(
        &self,
        phi: &GridFunction,
        deriv: &GridFunction,
    ) -> Result<GridFunction, SolveError> {
        let values = (0..self.nodes.len())
            .map(|i| {
                let (v, a) = self.inner(phi, i);
                let t = self.h_inverse(v)?;
                self.psi_value(deriv, i, a, t)
            })
            .collect::<Result<Vec<_>, SolveError>>()?;
        Ok(GridFunction::new(self.grid.clone(), values)?)
    }

    fn psi_value(&self, deriv: &GridFunction, i: usize, a: f64, t: f64) -> Result<f64, SolveError> {
        let d = &self.nodes[i];
        let hinv_slope = self.h_inverse_slope(t)?;
        Ok(hinv_slope * (deriv.eval(a) * deriv.eval(d.u) - d.g_prime_u) * d.finv_slope)
    }

    /// One application of the bundle map: `(Lambda(phi), Psi(phi, Phi))`.
    pub fn step(
        &self,
        phi: &GridFunction,
        deriv: &GridFunction,
    ) -> Result<(GridFunction, GridFunction), SolveError> {
        let n = self.nodes.len();
        let mut next_phi = Vec::with_capacity(n);
        let mut next_deriv = Vec::with_capacity(n);
        for i in 0..n {
            let (v, a) = self.inner(phi, i);
            let t = self.h_inverse(v)?;
            next_phi.push(t);
            next_deriv.push(self.psi_value(deriv, i, a, t)?);
        }
        Ok((
            GridFunction::new(self.grid.clone(), next_phi)?,
            GridFunction::new(self.grid.clone(), next_deriv)?,
        ))
    }
}

fn eval(e: &Expr, function: &'static str, x: f64) -> Result<f64, SolveError> {
    e.eval(x).map_err(|source| SolveError::Eval {
        function,
        x,
        source,
    })
}

fn monotone(
    forward: &Expr,
    derivative: &Expr,
    floor: f64,
    probe: f64,
    function: &'static str,
) -> Result<MonotoneMap, SolveError> {
    MonotoneMap::new(
        forward.clone(),
        derivative.clone(),
        floor,
        probe,
        FLOOR_PROBE_POINTS,
    )
    .map_err(|source| SolveError::Inverse { function, source })
}

/// `Lambda(phi)(x) = h^{-1}(phi(phi(f^{-1}(x))) - g(f^{-1}(x)))` at the grid nodes.
pub fn apply_lambda(phi: &GridFunction, ops: &Operators) -> Result<GridFunction, SolveError> {
    ops.lambda(phi)
}

/// `Psi(phi, Phi)(x) = (h^{-1})'(phi(phi(u)) - g(u)) * (Phi(phi(u)) Phi(u) - g'(u)) * (f^{-1})'(x)`
/// with `u = f^{-1}(x)`, at the grid nodes.
pub fn apply_psi(
    phi: &GridFunction,
    deriv: &GridFunction,
    ops: &Operators,
) -> Result<GridFunction, SolveError> {
    ops.psi(phi, deriv)
}

/// Iterates the bundle map from `(phi0, deriv0)` until both sup-deltas are
/// at most `opts.tol`.
///
/// Every iterate is checked against `Lip(phi) <= L` and `|Phi| <= rho` (with
/// [`MEMBERSHIP_SLACK`]); leaving the class is reported as
/// [`SolveError::MembershipDrift`].
pub fn iterate_fiber(
    phi0: GridFunction,
    deriv0: GridFunction,
    ops: &Operators,
    report: &ConditionReport,
    opts: IterationOptions,
    clock: &mut impl Clock,
) -> Result<SolutionPair, SolveError> {
    if !(opts.tol >= 0.0) {
        return Err(SolveError::BadSettings("tolerance must be non-negative"));
    }
    let (l, rho) = (report.chosen_l, report.chosen_rho);
    let check = |step: usize, phi: &GridFunction, deriv: &GridFunction| {
        let lipschitz = phi.lipschitz();
        let bound = deriv.bound();
        if lipschitz > l * (1.0 + MEMBERSHIP_SLACK) || bound > rho * (1.0 + MEMBERSHIP_SLACK) {
            Err(SolveError::MembershipDrift {
                step,
                lipschitz,
                bound,
                l,
                rho,
            })
        } else {
            Ok(())
        }
    };
    check(0, &phi0, &deriv0)?;

    let q = report.theoretical_factor();
    let mut phi = phi0;
    let mut deriv = deriv0;
    let mut steps = Vec::new();
    for n in 1..=opts.max_iter {
        let (next_phi, next_deriv) = ops.step(&phi, &deriv)?;
        let delta_phi = sup_dist(&next_phi, &phi);
        let delta_deriv = sup_dist(&next_deriv, &deriv);
        check(n, &next_phi, &next_deriv)?;
        let residual = if opts.residual_points >= 2 {
            verify::residual(&next_phi, ops.spec(), opts.residual_points)
                .map(|r| r.sup)
                .map_err(SolveError::from)?
        } else {
            f64::NAN
        };
        steps.push(StepRecord {
            n,
            delta_phi,
            delta_deriv,
            residual,
            seconds: clock.elapsed_seconds(),
        });
        phi = next_phi;
        deriv = next_deriv;
        let delta = delta_phi.max(delta_deriv);
        if delta <= opts.tol {
            return Ok(SolutionPair {
                phi,
                deriv,
                report: *report,
                trace: IterationTrace {
                    steps,
                    stop: StopReason::Converged,
                    error_bound: delta * q / (1.0 - q),
                },
            });
        }
    }
    let delta = steps
        .last()
        .map_or(f64::INFINITY, |s| s.delta_phi.max(s.delta_deriv));
    Err(SolveError::MaxIterExceeded(Box::new(SolutionPair {
        phi,
        deriv,
        report: *report,
        trace: IterationTrace {
            steps,
            stop: StopReason::MaxIter,
            error_bound: delta * q / (1.0 - q),
        },
    })))
}

/// Half-width of the computational window.
///
/// Iterates `b <- max(|h^{-1}(b + |g|)|, |h^{-1}(-(b + |g|))|)` from 0; the
/// map has slope at most `1/K < 1`, so it settles at a bound on the range
/// of the solution. Returns `max(10, 2 b)`.
pub fn default_interval(spec: &ProblemSpec) -> Result<f64, SolveError> {
    let h_map = monotone(&spec.h, &spec.h_prime, spec.constants.k, MIN_INTERVAL, "h")?;
    let g = spec.constants.g_bound.abs();
    let tol = if spec.inverse_tol > 0.0 {
        spec.inverse_tol
    } else {
        DEFAULT_INVERSE_TOL
    };
    let inv = |y: f64| {
        h_map.invert(y, tol).map_err(|source| SolveError::Inverse {
            function: "h",
            source,
        })
    };
    let mut b: f64 = 0.0;
    for _ in 0..10_000 {
        let next = inv(b + g)?.abs().max(inv(-(b + g))?.abs());
        let done = (next - b).abs() < 1e-6;
        b = next;
        if done {
            break;
        }
    }
    Ok(MIN_INTERVAL.max(2.0 * b))
}
