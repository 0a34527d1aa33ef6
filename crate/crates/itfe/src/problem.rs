//! Problem files.
//!
//! A problem file is a small sectioned key/value file (a subset of TOML):
//!
//! ```text
//! [functions]
//! h = "sin(x) + 4*x"
//! f = "exp(x) + 5*x"
//! g = "cos(x)"
//! # optional: hp, fp, gp (derivatives; derived symbolically when absent)
//!
//! [constants]      # optional: K, alpha, beta, g_bound
//! K = 3
//! alpha = 5
//! beta = 1
//!
//! [domain]         # optional: A (interval half-width), grid_n
//! [solver]         # optional: tol, max_iter, L, rho, policy
//! ```
//!
//! Unknown sections and keys are rejected.

use std::path::{Path, PathBuf};

use itfe_core::conditions::{
    estimate_constants, resolve_constants, validate, ConditionError, ConditionReport,
    DeclaredConstants, Disagreement, EstimatedConstants, Policy, ProbeFunctions,
};
use itfe_core::expr::{differentiate, parse_expr, DiffError, Expr, ParseError};
use itfe_core::solver::{
    default_interval, ProblemSpec, SolveError, DEFAULT_GRID_N, DEFAULT_INVERSE_TOL,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

/// Half-width of the window on which constants are estimated.
pub const PROBE_INTERVAL: f64 = 10.0;
pub const PROBE_POINTS: usize = 2001;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("functions.{key} (file byte {file_offset}): {source}")]
    Expression {
        key: &'static str,
        file_offset: usize,
        source: ParseError,
    },
    #[error("cannot derive {key}: {source}; supply it explicitly")]
    Derivative {
        key: &'static str,
        source: DiffError,
    },
    #[error("{key} = {value} is not allowed: {reason}")]
    BadValue {
        key: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("unknown policy `{0}` (expected midpoint, min or explicit)")]
    UnknownPolicy(String),
    #[error("policy `explicit` needs both L and rho")]
    ExplicitIncomplete,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub functions: FunctionsSection,
    #[serde(default)]
    pub constants: DeclaredConstants,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionsSection {
    pub h: Spanned<String>,
    pub f: Spanned<String>,
    pub g: Spanned<String>,
    pub hp: Option<Spanned<String>>,
    pub fp: Option<Spanned<String>>,
    pub gp: Option<Spanned<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub grid_n: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub rho: Option<f64>,
    pub policy: Option<String>,
}

/// Values that override the problem file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub grid_n: Option<usize>,
    pub interval: Option<f64>,
    pub l: Option<f64>,
    pub rho: Option<f64>,
}

/// Parsed functions and their derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Functions {
    pub h: Expr,
    pub f: Expr,
    pub g: Expr,
    pub h_prime: Expr,
    pub f_prime: Expr,
    pub g_prime: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    Midpoint,
    Min,
    Explicit,
}

/// A loaded problem file with every expression parsed.
#[derive(Debug, Clone)]
pub struct Problem {
    pub functions: Functions,
    pub declared: DeclaredConstants,
    pub interval: Option<f64>,
    pub grid_n: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub policy: PolicyChoice,
    pub l: Option<f64>,
    pub rho: Option<f64>,
}

fn expression(key: &'static str, s: &Spanned<String>) -> Result<Expr, ProblemError> {
    parse_expr(s.get_ref()).map_err(|source| ProblemError::Expression {
        key,
        // +1 skips the opening quote
        file_offset: s.span().start + 1 + source.offset,
        source,
    })
}

fn derivative(
    key: &'static str,
    given: &Option<Spanned<String>>,
    of: &Expr,
) -> Result<Expr, ProblemError> {
    match given {
        Some(s) => expression(key, s),
        None => differentiate(of).map_err(|source| ProblemError::Derivative { key, source }),
    }
}

fn finite(key: &'static str, v: Option<f64>) -> Result<Option<f64>, ProblemError> {
    match v {
        Some(value) if !value.is_finite() => Err(ProblemError::BadValue {
            key,
            value,
            reason: "must be finite",
        }),
        other => Ok(other),
    }
}

impl Problem {
    pub fn parse(text: &str) -> Result<Problem, ProblemError> {
        let file: ProblemFile = toml::from_str(text)?;
        Problem::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Problem, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Problem::parse(&text)
    }

    pub fn from_file(file: ProblemFile) -> Result<Problem, ProblemError> {
        let fs = &file.functions;
        let h = expression("h", &fs.h)?;
        let f = expression("f", &fs.f)?;
        let g = expression("g", &fs.g)?;
        let h_prime = derivative("hp", &fs.hp, &h)?;
        let f_prime = derivative("fp", &fs.fp, &f)?;
        let g_prime = derivative("gp", &fs.gp, &g)?;

        let c = file.constants;
        let declared = DeclaredConstants {
            k: finite("K", c.k)?,
            alpha: finite("alpha", c.alpha)?,
            beta: finite("beta", c.beta)?,
            g_bound: finite("g_bound", c.g_bound)?,
        };
        let interval = finite("A", file.domain.a)?;
        let tol = finite("tol", file.solver.tol)?;
        let policy = match file.solver.policy.as_deref() {
            None | Some("midpoint") => PolicyChoice::Midpoint,
            Some("min") => PolicyChoice::Min,
            Some("explicit") => PolicyChoice::Explicit,
            Some(other) => return Err(ProblemError::UnknownPolicy(other.to_string())),
        };
        let problem = Problem {
            functions: Functions {
                h,
                f,
                g,
                h_prime,
                f_prime,
                g_prime,
            },
            declared,
            interval,
            grid_n: file.domain.grid_n.unwrap_or(DEFAULT_GRID_N),
            tol: tol.unwrap_or(DEFAULT_TOL),
            max_iter: file.solver.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            policy,
            l: finite("L", file.solver.l)?,
            rho: finite("rho", file.solver.rho)?,
        };
        problem.check_settings()?;
        Ok(problem)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ProblemError> {
        if let Some(v) = o.tol {
            self.tol = v;
        }
        if let Some(v) = o.max_iter {
            self.max_iter = v;
        }
        if let Some(v) = o.grid_n {
            self.grid_n = v;
        }
        if let Some(v) = o.interval {
            self.interval = Some(v);
        }
        if let Some(v) = o.l {
            self.l = Some(v);
        }
        if let Some(v) = o.rho {
            self.rho = Some(v);
        }
        self.check_settings()
    }

    fn check_settings(&self) -> Result<(), ProblemError> {
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(ProblemError::BadValue {
                key: "tol",
                value: self.tol,
                reason: "must be finite and non-negative",
            });
        }
        if self.max_iter == 0 {
            return Err(ProblemError::BadValue {
                key: "max_iter",
                value: 0.0,
                reason: "need at least 1 iteration",
            });
        }
        if self.grid_n < 2 {
            return Err(ProblemError::BadValue {
                key: "grid_n",
                value: self.grid_n as f64,
                reason: "need at least 2 nodes",
            });
        }
        if let Some(a) = self.interval {
            if !(a.is_finite() && a > 0.0) {
                return Err(ProblemError::BadValue {
                    key: "A",
                    value: a,
                    reason: "must be positive",
                });
            }
        }
        if self.policy == PolicyChoice::Explicit && (self.l.is_none() || self.rho.is_none()) {
            return Err(ProblemError::ExplicitIncomplete);
        }
        Ok(())
    }

    /// Parameter policy. Explicit `L` or `rho` values imply the explicit
    /// policy; a missing partner takes the window midpoint.
    pub fn policy(&self, report: &ConditionReport) -> Policy {
        if self.l.is_none() && self.rho.is_none() {
            return match self.policy {
                PolicyChoice::Min => Policy::MinLMinRho,
                _ => Policy::Midpoint,
            };
        }
        Policy::Explicit {
            l: self.l.unwrap_or_else(|| report.l_window.midpoint()),
            rho: self.rho.unwrap_or_else(|| report.rho_window.midpoint()),
        }
    }

    pub fn probe(&self) -> ProbeFunctions<'_> {
        ProbeFunctions {
            h_prime: &self.functions.h_prime,
            f_prime: &self.functions.f_prime,
            g: &self.functions.g,
            g_prime: &self.functions.g_prime,
        }
    }
}

/// Result of checking a problem's hypotheses.
#[derive(Debug, Clone)]
pub struct Validated {
    pub estimated: EstimatedConstants,
    pub report: ConditionReport,
    pub warnings: Vec<Disagreement>,
}

/// Estimates the constants, merges them with the declared ones and checks
/// the solvability conditions with the problem's parameter policy.
pub fn validate_problem(p: &Problem) -> Result<Validated, ConditionError> {
    let estimated = estimate_constants(p.probe(), PROBE_INTERVAL, PROBE_POINTS)?;
    let (constants, provenance, warnings) = resolve_constants(p.declared, &estimated);
    let base = validate(constants, provenance)?;
    let report = base.with_policy(p.policy(&base))?;
    Ok(Validated {
        estimated,
        report,
        warnings,
    })
}

/// Builds the solver input; `A` defaults to [`default_interval`].
pub fn problem_spec(p: &Problem, v: &Validated) -> Result<ProblemSpec, SolveError> {
    let fs = &p.functions;
    let mut spec = ProblemSpec {
        h: fs.h.clone(),
        f: fs.f.clone(),
        g: fs.g.clone(),
        h_prime: fs.h_prime.clone(),
        f_prime: fs.f_prime.clone(),
        g_prime: fs.g_prime.clone(),
        constants: v.report.constants,
        interval_halfwidth: 0.0,
        grid_n: p.grid_n,
        inverse_tol: DEFAULT_INVERSE_TOL,
    };
    spec.interval_halfwidth = match p.interval {
        Some(a) => a,
        None => default_interval(&spec)?,
    };
    Ok(spec)
}
