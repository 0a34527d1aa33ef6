//! The `validate`, `solve` and `report` commands.
//!
//! Each returns its exit code: 0 success, 1 configuration error, 2 failed
//! solvability conditions, 3 no convergence.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use itfe_core::conditions::{beta_bound, classify, ConditionError};
use itfe_core::gridfn::{make_grid, GridFunction};
use itfe_core::inverse::InverseError;
use itfe_core::solver::{iterate_fiber, Clock, IterationOptions, Operators, SolveError};
use itfe_core::verify::verify_solution;

use crate::io::{write_grid_function_file, write_trace_file};
use crate::problem::{problem_spec, validate_problem, Overrides, Problem, Validated};
use crate::report::{
    artifact_paths, load_document, render, to_json, Artifacts, Document, Failure, RunDocument,
    Settings, Status, ValidationDocument, REPORT_SUFFIX,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_CONDITION: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

struct WallClock(Instant);

impl Clock for WallClock {
    fn elapsed_seconds(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn condition_kind(e: &ConditionError) -> &'static str {
    match e {
        ConditionError::NonFinite { .. } => "NonFinite",
        ConditionError::HypothesisViolation { .. } => "HypothesisViolation",
        ConditionError::BetaTooLarge { .. } => "BetaTooLarge",
        ConditionError::EmptyWindow { .. } => "EmptyWindow",
        ConditionError::ExplicitOutOfWindow { .. } => "ExplicitOutOfWindow",
        ConditionError::UnboundedG { .. } => "UnboundedG",
        ConditionError::Eval { .. } => "Eval",
    }
}

/// Evaluation failures while probing are configuration errors; everything
/// else is a failed condition.
fn condition_exit(e: &ConditionError) -> i32 {
    match e {
        ConditionError::Eval { .. } | ConditionError::NonFinite { .. } => EXIT_CONFIG,
        _ => EXIT_CONDITION,
    }
}

fn validation_failure(p: &Problem, e: &ConditionError) -> ValidationDocument {
    let (case, bound) = match *e {
        ConditionError::BetaTooLarge { case, bound, .. } => (Some(case), Some(bound)),
        _ => match (p.declared.k, p.declared.alpha) {
            (Some(k), Some(a)) if k > 1.0 && a > 0.0 => {
                let c = classify(k, a);
                (Some(c), Some(beta_bound(c, k, a)))
            }
            _ => (None, None),
        },
    };
    ValidationDocument {
        status: Status::Fail,
        case,
        beta_bound: bound,
        report: None,
        estimated: None,
        failure: Some(Failure {
            kind: condition_kind(e).to_string(),
            message: e.to_string(),
        }),
        warnings: Vec::new(),
    }
}

fn validation_pass(v: &Validated) -> ValidationDocument {
    ValidationDocument {
        status: Status::Pass,
        case: Some(v.report.case),
        beta_bound: Some(v.report.beta_bound),
        report: Some(v.report),
        estimated: Some(v.estimated),
        failure: None,
        warnings: v.warnings.iter().map(ToString::to_string).collect(),
    }
}

fn load(path: &Path, overrides: &Overrides, err: &mut dyn Write) -> Result<Problem, i32> {
    let mut p = Problem::load(path).map_err(|e| {
        let _ = writeln!(err, "error: {}: {e}", path.display());
        EXIT_CONFIG
    })?;
    p.apply(overrides).map_err(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_CONFIG
    })?;
    Ok(p)
}

/// Checks the solvability conditions and prints the report as JSON.
pub fn cmd_validate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let p = match load(path, &Overrides::default(), err) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match validate_problem(&p) {
        Ok(v) => {
            for w in &v.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            let _ = out.write_all(to_json(&validation_pass(&v)).as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let code = condition_exit(&e);
            let _ = writeln!(err, "error: {e}");
            if code == EXIT_CONDITION {
                let _ = out.write_all(to_json(&validation_failure(&p, &e)).as_bytes());
            }
            code
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveArgs {
    pub path: PathBuf,
    pub overrides: Overrides,
    pub trace: Option<PathBuf>,
    /// Output prefix; defaults to the problem file's stem.
    pub out: Option<PathBuf>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn solve_exit(e: &SolveError) -> i32 {
    match e {
        SolveError::MembershipDrift { .. } | SolveError::MaxIterExceeded(_) => EXIT_NO_CONVERGENCE,
        SolveError::Inverse {
            source: InverseError::FloorViolated { .. },
            ..
        } => EXIT_CONDITION,
        _ => EXIT_CONFIG,
    }
}

/// Validates, solves from the zero seed, writes the CSV artifacts and the
/// run summary and prints the verification report.
pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let p = match load(&args.path, &args.overrides, err) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let v = match validate_problem(&p) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return condition_exit(&e);
        }
    };
    let warnings: Vec<String> = v.warnings.iter().map(ToString::to_string).collect();
    for w in &warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let fail = |err: &mut dyn Write, e: SolveError| {
        let _ = writeln!(err, "error: {e}");
        solve_exit(&e)
    };
    let spec = match problem_spec(&p, &v) {
        Ok(s) => s,
        Err(e) => return fail(err, e),
    };
    let zero = |spec: &itfe_core::solver::ProblemSpec| -> Result<GridFunction, SolveError> {
        Ok(make_grid(spec.interval_halfwidth, spec.grid_n, |_| 0.0)?)
    };
    let seed = match zero(&spec) {
        Ok(s) => s,
        Err(e) => return fail(err, e),
    };
    let ops = match Operators::new(spec.clone()) {
        Ok(o) => o,
        Err(e) => return fail(err, e),
    };
    let opts = IterationOptions {
        tol: p.tol,
        max_iter: p.max_iter,
        residual_points: p.grid_n,
    };
    let mut clock = WallClock(Instant::now());
    let (sol, code) = match iterate_fiber(seed.clone(), seed, &ops, &v.report, opts, &mut clock) {
        Ok(sol) => (sol, EXIT_OK),
        Err(SolveError::MaxIterExceeded(partial)) => {
            let _ = writeln!(
                err,
                "error: no convergence after {} iterations (last delta {:e})",
                partial.trace.steps.len(),
                partial.trace.last_delta()
            );
            (*partial, EXIT_NO_CONVERGENCE)
        }
        Err(e) => return fail(err, e),
    };
    let verification = match verify_solution(&sol, &spec, spec.grid_n) {
        Ok(r) => r,
        Err(e) => return fail(err, e.into()),
    };

    let prefix = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(args.path.file_stem().unwrap_or_else(|| "itfe".as_ref())));
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        if let Err(e) = std::fs::create_dir_all(dir) {
            let _ = writeln!(err, "error: creating {}: {e}", dir.display());
            return EXIT_CONFIG;
        }
    }
    let phi_path = with_suffix(&prefix, "_phi.csv");
    let deriv_path = with_suffix(&prefix, "_Phi.csv");
    let mut writes = vec![
        write_grid_function_file(&phi_path, &sol.phi),
        write_grid_function_file(&deriv_path, &sol.deriv),
    ];
    if let Some(t) = &args.trace {
        writes.push(write_trace_file(t, &sol.trace));
    }
    let doc = RunDocument {
        problem: args.path.display().to_string(),
        converged: code == EXIT_OK,
        stop: sol.trace.stop,
        iterations: sol.trace.steps.len(),
        last_delta: sol.trace.last_delta(),
        error_bound: sol.trace.error_bound,
        settings: Settings {
            interval_halfwidth: spec.interval_halfwidth,
            grid_n: spec.grid_n,
            tol: p.tol,
            max_iter: p.max_iter,
            inverse_tol: spec.inverse_tol,
        },
        conditions: sol.report,
        verification,
        artifacts: Artifacts {
            phi: phi_path.display().to_string(),
            deriv: deriv_path.display().to_string(),
            trace: args.trace.as_ref().map(|t| t.display().to_string()),
        },
        warnings,
    };
    let report_path = with_suffix(&prefix, REPORT_SUFFIX);
    writes.push(
        std::fs::write(&report_path, to_json(&doc))
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", report_path.display())),
    );
    for w in writes {
        if let Err(e) = w {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_CONFIG;
        }
    }
    let _ = out.write_all(to_json(&verification).as_bytes());
    code
}

/// Prints the artifacts found at `path` as tables, or re-emits them as JSON.
pub fn cmd_report(path: &Path, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let paths = match artifact_paths(path) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut docs: Vec<Document> = Vec::with_capacity(paths.len());
    for p in &paths {
        match load_document(p) {
            Ok(d) => docs.push(d),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_CONFIG;
            }
        }
    }
    for d in &docs {
        let text = if json { to_json(d) } else { render(d) };
        let _ = out.write_all(text.as_bytes());
    }
    EXIT_OK
}
