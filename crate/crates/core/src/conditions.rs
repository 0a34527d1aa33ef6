//! Solvability conditions and the choice of `L` and `rho`.
//!
//! With `K = inf |h'|`, `alpha = inf |f'|`, `beta = sup |g'|` and `g`
//! bounded, a `C^1` solution with bounded derivative exists when `K > 1`,
//! `alpha > 0`, `beta > 0` and
//!
//! * `beta < alpha^2 K^2 / 4` if `alpha < 2(1 - 1/K)` ([`Case::SmallAlpha`]),
//! * `beta < (K - 1)(alpha K - K + 1)` otherwise ([`Case::LargeAlpha`]).
//!
//! The iteration then runs on functions with Lipschitz constant at most `L`
//! and derivatives bounded by `rho`, where both lie in
//! `[alpha K/2 - sqrt(D)/2, alpha K/2 + sqrt(D)/2]` with
//! `D = alpha^2 K^2 - 4 beta`, and additionally `L < K - 1`, `rho < alpha K/2`.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{EvalError, Expr};

/// Relative amount by which chosen values are pulled inside open window ends.
pub const OPEN_END_SHRINK: f64 = 1e-9;

/// Relative amount by which a declared constant may be more optimistic than
/// its estimate before a warning is raised.
pub const DISAGREEMENT_WARN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub g_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Declared,
    Estimated,
}

/// Where each constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantsProvenance {
    #[serde(rename = "K")]
    pub k: Provenance,
    pub alpha: Provenance,
    pub beta: Provenance,
    pub g_bound: Provenance,
}

impl ConstantsProvenance {
    pub const DECLARED: ConstantsProvenance = ConstantsProvenance {
        k: Provenance::Declared,
        alpha: Provenance::Declared,
        beta: Provenance::Declared,
        g_bound: Provenance::Declared,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `alpha < 2(1 - 1/K)`; needs `beta < alpha^2 K^2 / 4`.
    SmallAlpha,
    /// `alpha >= 2(1 - 1/K)`; needs `beta < (K - 1)(alpha K - K + 1)`.
    LargeAlpha,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::SmallAlpha => write!(f, "SmallAlpha"),
            Case::LargeAlpha => write!(f, "LargeAlpha"),
        }
    }
}

/// The `alpha` at which the two cases meet.
pub fn case_threshold(k: f64) -> f64 {
    2.0 * (1.0 - 1.0 / k)
}

pub fn classify(k: f64, alpha: f64) -> Case {
    if alpha < case_threshold(k) {
        Case::SmallAlpha
    } else {
        Case::LargeAlpha
    }
}

/// Strict upper bound on `beta` for the given case.
pub fn beta_bound(case: Case, k: f64, alpha: f64) -> f64 {
    match case {
        Case::SmallAlpha => 0.25 * alpha * alpha * k * k,
        Case::LargeAlpha => (k - 1.0) * (alpha * k - k + 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// `K > 1`
    KAboveOne,
    /// `alpha > 0`
    AlphaPositive,
    /// `beta > 0`
    BetaPositive,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConditionError {
    NonFinite {
        name: &'static str,
        value: f64,
    },
    HypothesisViolation {
        hypothesis: Hypothesis,
        value: f64,
    },
    BetaTooLarge {
        case: Case,
        beta: f64,
        bound: f64,
    },
    /// A window came out empty although the `beta` bound holds.
    EmptyWindow {
        name: &'static str,
    },
    ExplicitOutOfWindow {
        name: &'static str,
        value: f64,
        window: Window,
    },
    /// `g` or `g'` keeps growing with the probe window.
    UnboundedG {
        name: &'static str,
        near: f64,
        far: f64,
    },
    Eval {
        function: &'static str,
        x: f64,
        source: EvalError,
    },
}

impl fmt::Display for ConditionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionError::NonFinite { name, value } => write!(f, "{name} = {value} is not finite"),
            ConditionError::HypothesisViolation { hypothesis, value } => {
                let what = match hypothesis {
                    Hypothesis::KAboveOne => "K must exceed 1",
                    Hypothesis::AlphaPositive => "alpha must be positive",
                    Hypothesis::BetaPositive => "beta must be positive",
                };
                write!(f, "hypothesis violated: {what} (got {value})")
            }
            ConditionError::BetaTooLarge { case, beta, bound } => {
                write!(f, "beta = {beta} is not below the {case} bound {bound}")
            }
            ConditionError::EmptyWindow { name } => {
                write!(f, "admissible window for {name} is empty")
            }
            ConditionError::ExplicitOutOfWindow { name, value, window } => {
                write!(f, "{name} = {value} lies outside its admissible window {window}")
            }
            ConditionError::UnboundedG { name, near, far } => write!(
                f,
                "{name} appears unbounded: sup grows from {near} to {far} when the probe window doubles"
            ),
            ConditionError::Eval { function, x, source } => {
                write!(f, "evaluating {function} at x = {x}: {source}")
            }
        }
    }
}

impl core::error::Error for ConditionError {}

/// Interval `[lower, upper]`, or `[lower, upper)` when `upper_open`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lower: f64,
    pub upper: f64,
    pub upper_open: bool,
}

impl Window {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower
            && if self.upper_open {
                v < self.upper
            } else {
                v <= self.upper
            }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lower < self.upper || (self.lower == self.upper && !self.upper_open))
    }

    /// Largest value the chooser will return.
    pub fn effective_upper(&self) -> f64 {
        if self.upper_open {
            self.upper - OPEN_END_SHRINK * self.upper.abs()
        } else {
            self.upper
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.effective_upper())
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.upper_open { ')' } else { ']' };
        write!(f, "[{}, {}{close}", self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Midpoint,
    #[serde(rename = "min")]
    MinLMinRho,
    Explicit {
        l: f64,
        rho: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub case: Case,
    pub constants: Constants,
    pub provenance: ConstantsProvenance,
    /// `2(1 - 1/K)`
    pub case_threshold: f64,
    /// The bound `beta` has to stay below in this case.
    pub beta_bound: f64,
    /// `alpha^2 K^2 - 4 beta`
    pub discriminant: f64,
    #[serde(rename = "L_window")]
    pub l_window: Window,
    pub rho_window: Window,
    #[serde(rename = "chosen_L")]
    pub chosen_l: f64,
    pub chosen_rho: f64,
    /// `(L + 1)/K`, the contraction factor of the base map.
    pub lambda_factor: f64,
    /// `2 rho/(alpha K)`, the contraction factor of the fiber map.
    pub psi_factor: f64,
}

impl ConditionReport {
    /// Returns a copy with `(L, rho)` picked by `policy` and the factors updated.
    pub fn with_policy(&self, policy: Policy) -> Result<ConditionReport, ConditionError> {
        let (l, rho) = choose_parameters(self, policy)?;
        let mut out = *self;
        out.chosen_l = l;
        out.chosen_rho = rho;
        out.lambda_factor = (l + 1.0) / self.constants.k;
        out.psi_factor = 2.0 * rho / (self.constants.alpha * self.constants.k);
        Ok(out)
    }

    /// Larger of the two contraction factors.
    pub fn theoretical_factor(&self) -> f64 {
        self.lambda_factor.max(self.psi_factor)
    }
}

/// Checks the hypotheses, classifies the case and computes both windows.
/// The returned report carries the [`Policy::Midpoint`] choice.
pub fn validate(
    c: Constants,
    provenance: ConstantsProvenance,
) -> Result<ConditionReport, ConditionError> {
    for (name, value) in [
        ("K", c.k),
        ("alpha", c.alpha),
        ("beta", c.beta),
        ("g_bound", c.g_bound),
    ] {
        if !value.is_finite() {
            return Err(ConditionError::NonFinite { name, value });
        }
    }
    if c.k <= 1.0 {
        return Err(ConditionError::HypothesisViolation {
            hypothesis: Hypothesis::KAboveOne,
            value: c.k,
        });
    }
    if c.alpha <= 0.0 {
        return Err(ConditionError::HypothesisViolation {
            hypothesis: Hypothesis::AlphaPositive,
            value: c.alpha,
        });
    }
    if c.beta <= 0.0 {
        return Err(ConditionError::HypothesisViolation {
            hypothesis: Hypothesis::BetaPositive,
            value: c.beta,
        });
    }
    let case = classify(c.k, c.alpha);
    let bound = beta_bound(case, c.k, c.alpha);
    if !(c.beta < bound) {
        return Err(ConditionError::BetaTooLarge {
            case,
            beta: c.beta,
            bound,
        });
    }

    let ak = c.alpha * c.k;
    let discriminant = ak * ak - 4.0 * c.beta;
    if !(discriminant > 0.0) {
        return Err(ConditionError::EmptyWindow { name: "rho" });
    }
    let root = libm::sqrt(discriminant);
    // roots of t^2 - alpha K t + beta; the small one without cancellation
    let lower = 2.0 * c.beta / (ak + root);
    let upper = 0.5 * (ak + root);

    let l_window = clip(lower, upper, c.k - 1.0);
    let rho_window = clip(lower, upper, 0.5 * ak);
    if l_window.is_empty() {
        return Err(ConditionError::EmptyWindow { name: "L" });
    }
    if rho_window.is_empty() {
        return Err(ConditionError::EmptyWindow { name: "rho" });
    }

    let report = ConditionReport {
        case,
        constants: c,
        provenance,
        case_threshold: case_threshold(c.k),
        beta_bound: bound,
        discriminant,
        l_window,
        rho_window,
        chosen_l: 0.0,
        chosen_rho: 0.0,
        lambda_factor: 0.0,
        psi_factor: 0.0,
    };
    report.with_policy(Policy::Midpoint)
}

// [lower, upper] ∩ (0, open_cap); lower > 0 always holds since beta > 0
fn clip(lower: f64, upper: f64, open_cap: f64) -> Window {
    if open_cap <= upper {
        Window {
            lower,
            upper: open_cap,
            upper_open: true,
        }
    } else {
        Window {
            lower,
            upper,
            upper_open: false,
        }
    }
}

/// Picks `(L, rho)` inside the report's windows.
pub fn choose_parameters(
    r: &ConditionReport,
    policy: Policy,
) -> Result<(f64, f64), ConditionError> {
    match policy {
        Policy::Midpoint => Ok((r.l_window.midpoint(), r.rho_window.midpoint())),
        Policy::MinLMinRho => Ok((r.l_window.lower, r.rho_window.lower)),
        Policy::Explicit { l, rho } => {
            if !r.l_window.contains(l) {
                return Err(ConditionError::ExplicitOutOfWindow {
                    name: "L",
                    value: l,
                    window: r.l_window,
                });
            }
            if !r.rho_window.contains(rho) {
                return Err(ConditionError::ExplicitOutOfWindow {
                    name: "rho",
                    value: rho,
                    window: r.rho_window,
                });
            }
            Ok((l, rho))
        }
    }
}

/// Constants read off the derivative expressions on a finite probe grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedConstants {
    pub constants: Constants,
    pub probe_interval: f64,
    pub probe_points: usize,
}

/// Expressions needed to estimate the constants.
#[derive(Debug, Clone, Copy)]
pub struct ProbeFunctions<'a> {
    pub h_prime: &'a Expr,
    pub f_prime: &'a Expr,
    pub g: &'a Expr,
    pub g_prime: &'a Expr,
}

/// Grid minima of `|h'|`, `|f'|` and maxima of `|g'|`, `|g|` over
/// `n_probe` uniform points of `[-probe_interval, probe_interval]`.
///
/// These are estimates, not bounds over the whole line. As a guard against
/// unbounded `g`, the maxima of `|g|` and `|g'|` are recomputed on the
/// doubled window and must not grow by more than 0.1%.
pub fn estimate_constants(
    p: ProbeFunctions<'_>,
    probe_interval: f64,
    n_probe: usize,
) -> Result<EstimatedConstants, ConditionError> {
    let near = probe(p, probe_interval, n_probe)?;
    let far = probe(p, 2.0 * probe_interval, 2 * n_probe - 1)?;
    for (name, a, b) in [
        ("g", near.g_bound, far.g_bound),
        ("g'", near.beta, far.beta),
    ] {
        if b > a * (1.0 + 1e-3) + f64::MIN_POSITIVE {
            return Err(ConditionError::UnboundedG {
                name,
                near: a,
                far: b,
            });
        }
    }
    Ok(EstimatedConstants {
        constants: near,
        probe_interval,
        probe_points: n_probe,
    })
}

fn probe(p: ProbeFunctions<'_>, a: f64, n: usize) -> Result<Constants, ConditionError> {
    let n = n.max(2);
    let eval = |function: &'static str, e: &Expr, x: f64| {
        e.eval(x)
            .map(f64::abs)
            .map_err(|source| ConditionError::Eval {
                function,
                x,
                source,
            })
    };
    let mut c = Constants {
        k: f64::INFINITY,
        alpha: f64::INFINITY,
        beta: 0.0,
        g_bound: 0.0,
    };
    for i in 0..n {
        let x = a * ((2 * i) as f64 - (n - 1) as f64) / (n - 1) as f64;
        c.k = c.k.min(eval("h'", p.h_prime, x)?);
        c.alpha = c.alpha.min(eval("f'", p.f_prime, x)?);
        c.beta = c.beta.max(eval("g'", p.g_prime, x)?);
        c.g_bound = c.g_bound.max(eval("g", p.g, x)?);
    }
    Ok(c)
}

/// Constants given explicitly, each optional.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredConstants {
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub g_bound: Option<f64>,
}

/// A declared constant contradicted by its estimate: a floor (`K`, `alpha`)
/// above the probed minimum or a ceiling (`beta`, `g_bound`) below the
/// probed maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disagreement {
    pub name: &'static str,
    pub declared: f64,
    pub estimated: f64,
}

impl fmt::Display for Disagreement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "declared {} = {} is contradicted by the probe estimate {}; using the declared value",
            self.name, self.declared, self.estimated
        )
    }
}

/// Merges declared and estimated constants; declared values win.
pub fn resolve_constants(
    declared: DeclaredConstants,
    estimated: &EstimatedConstants,
) -> (Constants, ConstantsProvenance, Vec<Disagreement>) {
    let mut warnings = Vec::new();
    // `floor` is true for infima, where declaring less than the estimate is
    // merely conservative.
    let mut pick = |name: &'static str, floor: bool, d: Option<f64>, e: f64| match d {
        Some(v) => {
            let excess = if floor { v - e } else { e - v };
            if excess > DISAGREEMENT_WARN * v.abs().max(e.abs()) {
                warnings.push(Disagreement {
                    name,
                    declared: v,
                    estimated: e,
                });
            }
            (v, Provenance::Declared)
        }
        None => (e, Provenance::Estimated),
    };
    let est = estimated.constants;
    let (k, pk) = pick("K", true, declared.k, est.k);
    let (alpha, pa) = pick("alpha", true, declared.alpha, est.alpha);
    let (beta, pb) = pick("beta", false, declared.beta, est.beta);
    let (g_bound, pg) = pick("g_bound", false, declared.g_bound, est.g_bound);
    (
        Constants {
            k,
            alpha,
            beta,
            g_bound,
        },
        ConstantsProvenance {
            k: pk,
            alpha: pa,
            beta: pb,
            g_bound: pg,
        },
        warnings,
    )
}
