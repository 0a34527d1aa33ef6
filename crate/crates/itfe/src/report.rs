//! JSON documents emitted by the commands and their text rendering.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use itfe_core::conditions::{Case, ConditionReport, EstimatedConstants};
use itfe_core::solver::StopReason;
use itfe_core::verify::VerificationReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Suffix of the run summary written by `solve`.
pub const REPORT_SUFFIX: &str = "_report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Failure {
    pub kind: String,
    pub message: String,
}

/// Output of `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationDocument {
    pub status: Status,
    pub case: Option<Case>,
    pub beta_bound: Option<f64>,
    pub report: Option<ConditionReport>,
    pub estimated: Option<EstimatedConstants>,
    pub failure: Option<Failure>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(rename = "A")]
    pub interval_halfwidth: f64,
    pub grid_n: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub inverse_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifacts {
    pub phi: String,
    #[serde(rename = "Phi")]
    pub deriv: String,
    pub trace: Option<String>,
}

/// Summary of a `solve` run, written next to the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDocument {
    pub problem: String,
    pub converged: bool,
    pub stop: StopReason,
    pub iterations: usize,
    pub last_delta: f64,
    pub error_bound: f64,
    pub settings: Settings,
    pub conditions: ConditionReport,
    pub verification: VerificationReport,
    pub artifacts: Artifacts,
    pub warnings: Vec<String>,
}

/// Any JSON document the tool emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Document {
    Run(Box<RunDocument>),
    Validation(Box<ValidationDocument>),
    Verification(VerificationReport),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no artifact found: {0}")]
    Missing(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: not a recognised report: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

pub fn parse_document(text: &str) -> Result<Document, serde_json::Error> {
    serde_json::from_str(text)
}

/// The files `report` reads: `path` itself, or every `*_report.json` in a
/// directory, sorted by name.
pub fn artifact_paths(path: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(ReportError::Missing(path.display().to_string()));
    }
    let entries = std::fs::read_dir(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(REPORT_SUFFIX))
        })
        .collect();
    if out.is_empty() {
        return Err(ReportError::Missing(format!(
            "{} contains no *{REPORT_SUFFIX}",
            path.display()
        )));
    }
    out.sort();
    Ok(out)
}

pub fn load_document(path: &Path) -> Result<Document, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_document(&text).map_err(|source| ReportError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn row(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "  {key:<28} {value}");
}

fn conditions_rows(out: &mut String, r: &ConditionReport) {
    row(out, "case", r.case);
    row(
        out,
        "K / alpha / beta",
        format!(
            "{} / {} / {}",
            r.constants.k, r.constants.alpha, r.constants.beta
        ),
    );
    row(out, "beta bound", r.beta_bound);
    row(out, "L window", r.l_window);
    row(out, "rho window", r.rho_window);
    row(
        out,
        "chosen L / rho",
        format!("{} / {}", r.chosen_l, r.chosen_rho),
    );
    row(out, "Lambda factor", r.lambda_factor);
    row(out, "Psi factor", r.psi_factor);
}

fn verification_rows(out: &mut String, v: &VerificationReport) {
    row(
        out,
        "residual sup",
        format!("{:.3e} at x = {}", v.residual_sup, v.residual_argmax),
    );
    row(out, "residual points", v.residual_points);
    row(
        out,
        "derivative mismatch",
        format!(
            "{:.3e} (step {:.3e})",
            v.derivative_mismatch_sup, v.difference_step
        ),
    );
    row(out, "Lip(phi)", v.lipschitz_of_solution);
    row(out, "sup |Phi|", v.derivative_bound);
    row(
        out,
        "observed ratio",
        format!("{:.4} (burn-in {})", v.observed_ratio, v.ratio_burn_in),
    );
    row(
        out,
        "theoretical factor",
        format!("{:.4}", v.theoretical_factor),
    );
}

/// Human-readable table of a document.
pub fn render(doc: &Document) -> String {
    let mut out = String::new();
    match doc {
        Document::Run(r) => {
            let _ = writeln!(out, "run: {}", r.problem);
            row(&mut out, "converged", r.converged);
            row(&mut out, "iterations", r.iterations);
            row(&mut out, "last delta", format!("{:.3e}", r.last_delta));
            row(&mut out, "error bound", format!("{:.3e}", r.error_bound));
            row(
                &mut out,
                "A / grid_n",
                format!("{} / {}", r.settings.interval_halfwidth, r.settings.grid_n),
            );
            row(&mut out, "tol", r.settings.tol);
            conditions_rows(&mut out, &r.conditions);
            verification_rows(&mut out, &r.verification);
            for w in &r.warnings {
                let _ = writeln!(out, "  warning: {w}");
            }
        }
        Document::Validation(v) => {
            let _ = writeln!(out, "validation: {:?}", v.status);
            if let Some(r) = &v.report {
                conditions_rows(&mut out, r);
            } else {
                if let Some(c) = v.case {
                    row(&mut out, "case", c);
                }
                if let Some(b) = v.beta_bound {
                    row(&mut out, "beta bound", b);
                }
            }
            if let Some(f) = &v.failure {
                row(&mut out, "failure", format!("{}: {}", f.kind, f.message));
            }
            for w in &v.warnings {
                let _ = writeln!(out, "  warning: {w}");
            }
        }
        Document::Verification(v) => {
            let _ = writeln!(out, "verification");
            verification_rows(&mut out, v);
        }
    }
    out
}
