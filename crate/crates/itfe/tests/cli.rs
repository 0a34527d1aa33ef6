use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use itfe::io::{read_grid_function, read_trace};
use itfe::report::{parse_document, to_json, Document, Status};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn itfe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itfe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_example_passes() {
    let o = itfe(&["validate", p(&fixture("example_sec4.problem"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let Document::Validation(v) = parse_document(&stdout(&o)).unwrap() else {
        panic!("not a validation document")
    };
    assert_eq!(v.status, Status::Pass);
    assert_eq!(v.beta_bound, Some(26.0));
    assert_eq!(format!("{:?}", v.case.unwrap()), "LargeAlpha");
    assert!(v.warnings.is_empty());
}

#[test]
fn validate_k_equal_one_fails_with_report() {
    let o = itfe(&["validate", p(&fixture("k_equal_one.problem"))]);
    assert_eq!(code(&o), 2);
    let Document::Validation(v) = parse_document(&stdout(&o)).unwrap() else {
        panic!("not a validation document")
    };
    assert_eq!(v.status, Status::Fail);
    assert_eq!(v.failure.unwrap().kind, "HypothesisViolation");
}

#[test]
fn validate_unbounded_g_fails() {
    let o = itfe(&["validate", p(&fixture("unbounded_g.problem"))]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("UnboundedG"));
}

#[test]
fn validate_malformed_reports_offset() {
    let o = itfe(&["validate", p(&fixture("malformed.problem"))]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).is_empty());
    let msg = stderr(&o);
    assert!(msg.contains("functions.h"), "{msg}");
    assert!(msg.contains("byte 5"), "{msg}");
}

#[test]
fn validate_missing_file_is_config_error() {
    let o = itfe(&["validate", "/nonexistent/x.problem"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_errors_are_config_errors() {
    assert_eq!(code(&itfe(&["solve"])), 1);
    assert_eq!(code(&itfe(&["frobnicate"])), 1);
    assert_eq!(code(&itfe(&["--help"])), 0);
}

#[test]
fn solve_example_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("run");
    let trace = dir.path().join("trace.csv");
    let o = itfe(&[
        "solve",
        p(&fixture("example_sec4.problem")),
        "--tol",
        "1e-10",
        "--out",
        p(&prefix),
        "--trace",
        p(&trace),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let Document::Verification(v) = parse_document(&stdout(&o)).unwrap() else {
        panic!("not a verification report")
    };
    assert!(v.residual_sup <= 1e-6, "{}", v.residual_sup);

    let phi =
        read_grid_function(std::fs::File::open(dir.path().join("run_phi.csv")).unwrap()).unwrap();
    let deriv =
        read_grid_function(std::fs::File::open(dir.path().join("run_Phi.csv")).unwrap()).unwrap();
    assert_eq!(phi.values().len(), 4001);
    assert_eq!(deriv.values().len(), 4001);
    let steps = read_trace(std::fs::File::open(&trace).unwrap()).unwrap();
    assert!(!steps.is_empty() && steps.len() <= 100);
    assert!(steps.last().unwrap().delta_phi <= 1e-10);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("n,delta_phi,delta_Phi,residual,seconds\n"));
    assert!(!text.contains('\r'));

    let report = itfe(&["report", p(dir.path())]);
    assert_eq!(code(&report), 0);
    let table = stdout(&report);
    for key in ["residual sup", "Lambda factor", "observed ratio"] {
        assert!(table.contains(key), "{table}");
    }
}

#[test]
fn solve_trivial_converges_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("t");
    let o = itfe(&["solve", p(&fixture("trivial.problem")), "--out", p(&prefix)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let phi =
        read_grid_function(std::fs::File::open(dir.path().join("t_phi.csv")).unwrap()).unwrap();
    assert!(phi.values().iter().all(|&v| v == 0.0));
    let Document::Run(run) =
        parse_document(&std::fs::read_to_string(dir.path().join("t_report.json")).unwrap())
            .unwrap()
    else {
        panic!("not a run document")
    };
    assert_eq!(run.iterations, 1);
    assert!(run.converged);
}

#[test]
fn solve_max_iter_one_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("m");
    let o = itfe(&[
        "solve",
        p(&fixture("example_sec4.problem")),
        "--max-iter",
        "1",
        "--out",
        p(&prefix),
    ]);
    assert_eq!(code(&o), 3);
    // partial results are still written
    assert!(dir.path().join("m_phi.csv").exists());
    let Document::Run(run) =
        parse_document(&std::fs::read_to_string(dir.path().join("m_report.json")).unwrap())
            .unwrap()
    else {
        panic!("not a run document")
    };
    assert!(!run.converged);
    assert_eq!(run.iterations, 1);
}

#[test]
fn solve_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("f");
    let o = itfe(&[
        "solve",
        p(&fixture("example_sec4.problem")),
        "--grid-n",
        "501",
        "--interval",
        "12",
        "--L",
        "1",
        "--rho",
        "1",
        "--tol",
        "1e-8",
        "--out",
        p(&prefix),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let Document::Run(run) =
        parse_document(&std::fs::read_to_string(dir.path().join("f_report.json")).unwrap())
            .unwrap()
    else {
        panic!("not a run document")
    };
    assert_eq!(run.settings.grid_n, 501);
    assert_eq!(run.settings.interval_halfwidth, 12.0);
    assert_eq!(run.settings.tol, 1e-8);
    assert_eq!(
        (run.conditions.chosen_l, run.conditions.chosen_rho),
        (1.0, 1.0)
    );
    assert!((run.conditions.lambda_factor - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn solve_explicit_out_of_window_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = itfe(&[
        "solve",
        p(&fixture("example_sec4.problem")),
        "--L",
        "2.5",
        "--out",
        p(&dir.path().join("x")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("outside its admissible window"));
}

#[test]
fn solve_other_fixtures() {
    for name in ["small_alpha.problem", "decreasing.problem"] {
        let dir = tempfile::tempdir().unwrap();
        let o = itfe(&[
            "solve",
            p(&fixture(name)),
            "--out",
            p(&dir.path().join("s")),
        ]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        let Document::Verification(v) = parse_document(&stdout(&o)).unwrap() else {
            panic!("not a verification report")
        };
        assert!(v.residual_sup <= 1e-4, "{name}: {}", v.residual_sup);
    }
}

#[test]
fn emitted_json_round_trips_through_report() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("r");
    let solve = itfe(&[
        "solve",
        p(&fixture("example_sec4.problem")),
        "--out",
        p(&prefix),
    ]);
    assert_eq!(code(&solve), 0);

    let verification = dir.path().join("verification.json");
    std::fs::write(&verification, solve.stdout.clone()).unwrap();
    let validation = dir.path().join("validation.json");
    std::fs::write(
        &validation,
        itfe(&["validate", p(&fixture("example_sec4.problem"))]).stdout,
    )
    .unwrap();
    let failed = dir.path().join("failed.json");
    std::fs::write(
        &failed,
        itfe(&["validate", p(&fixture("k_equal_one.problem"))]).stdout,
    )
    .unwrap();

    for file in [
        dir.path().join("r_report.json"),
        verification,
        validation,
        failed,
    ] {
        let original = std::fs::read_to_string(&file).unwrap();
        let again = itfe(&["report", p(&file), "--json"]);
        assert_eq!(code(&again), 0);
        assert_eq!(stdout(&again), original, "{}", file.display());
        assert_eq!(to_json(&parse_document(&original).unwrap()), original);
    }
}

#[test]
fn report_missing_and_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let o = itfe(&["report", p(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no artifact"));

    assert_eq!(code(&itfe(&["report", p(&dir.path().join("absent"))])), 1);

    let bad = dir.path().join("bad_report.json");
    std::fs::write(&bad, "{\"converged\": tru").unwrap();
    let o = itfe(&["report", p(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad_report.json"));
}
