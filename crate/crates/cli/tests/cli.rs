use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::NamedTempFile;

const DISK: &str = include_str!("../corpus/disk.problem");
const MALFORMED: &str = include_str!("../corpus/malformed.problem");

fn problem(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn geoconvex(args: &[&str], file: Option<&Path>, env_seed: Option<&str>) -> (i32, Value, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_geoconvex"));
    cmd.arg(args[0]);
    if let Some(f) = file {
        cmd.arg(f);
    }
    cmd.args(&args[1..]).env_remove("GEOCONVEX_SEED");
    if let Some(s) = env_seed {
        cmd.env("GEOCONVEX_SEED", s);
    }
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    let json = serde_json::from_slice(&stdout).unwrap_or(Value::Null);
    (status.code().unwrap(), json, String::from_utf8(stderr).unwrap())
}

#[test]
fn disk_solve_reaches_the_leftmost_point() {
    let f = problem(DISK);
    let (code, r, log) = geoconvex(&["solve"], Some(f.path()), None);
    assert_eq!(code, 0, "{log}");
    assert_eq!(r["status"], "pass");
    let x: Vec<f64> = r["point"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(((x[0] + 1.0).powi(2) + x[1].powi(2)).sqrt() < 1e-5, "{x:?}");
    assert!((r["multipliers"][0].as_f64().unwrap() - 0.5).abs() < 1e-5);
    assert!(log.contains("solve: pass"));
}

#[test]
fn malformed_constraint_reports_the_offset() {
    let f = problem(MALFORMED);
    let (code, r, _) = geoconvex(&["solve"], Some(f.path()), None);
    assert_eq!(code, 2);
    assert_eq!(r["error_kind"], "ParseError");
    assert_eq!(r["error_offset"], 5);
    assert_eq!(r["error_line"], 4);
}

#[test]
fn separating_an_interior_point_is_an_input_error() {
    let f = problem(DISK);
    let (code, r, _) = geoconvex(&["separate", "--point", "0.1,0.1"], Some(f.path()), None);
    assert_eq!(code, 2);
    assert_eq!(r["error_kind"], "PointInSet");
}

#[test]
fn support_needs_a_boundary_point() {
    let f = problem(DISK);
    let (code, r, _) = geoconvex(&["support", "--point", "0.5,0"], Some(f.path()), None);
    assert_eq!(code, 2);
    assert_eq!(r["error_kind"], "NotBoundaryPoint");
}

#[test]
fn kkt_failure_at_a_non_stationary_point_exits_one() {
    let f = problem(DISK);
    let (code, r, _) = geoconvex(&["kkt", "--point", "0,0"], Some(f.path()), None);
    assert_eq!(code, 1);
    assert_eq!(r["status"], "fail");
    let stationarity = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "kkt.stationarity").unwrap();
    assert_eq!(stationarity["status"], "fail");
}

#[test]
fn kkt_accepts_negative_coordinates_and_the_start_point() {
    let f = problem(DISK);
    let (code, _, _) = geoconvex(&["kkt", "--point", "-1,0"], Some(f.path()), None);
    assert_eq!(code, 0);
    let (code, r, _) = geoconvex(&["kkt", "--use-start"], Some(f.path()), None);
    assert_eq!(code, 1);
    assert_eq!(r["point"], serde_json::json!([0.3, 0.4]));
}

#[test]
fn missing_file_is_an_input_error() {
    let (code, r, _) = geoconvex(&["solve"], Some(Path::new("/nonexistent/problem.txt")), None);
    assert_eq!(code, 2);
    assert_eq!(r["error_kind"], "IoError");
}

#[test]
fn unknown_command_is_a_usage_error() {
    let (code, _, _) = geoconvex(&["optimize"], None, None);
    assert_eq!(code, 2);
}

#[test]
fn seed_precedence() {
    let f = problem(&format!("{DISK}\n"));
    let (_, r, _) = geoconvex(&["separate", "--point", "2,1"], Some(f.path()), None);
    assert_eq!(r["seed"], 0);
    let (_, r, _) = geoconvex(&["separate", "--point", "2,1"], Some(f.path()), Some("11"));
    assert_eq!(r["seed"], 11);
    let (_, r, _) = geoconvex(&["separate", "--point", "2,1", "--seed", "5"], Some(f.path()), Some("11"));
    assert_eq!(r["seed"], 5);
    let (code, r, _) = geoconvex(&["separate", "--point", "2,1"], Some(f.path()), Some("eleven"));
    assert_eq!((code, r["error_kind"].as_str()), (2, Some("InvalidArgument")));
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let f = problem(DISK);
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_ms");
        v
    };
    for args in [&["separate", "--point", "2,1"][..], &["cone", "--point", "1,0"], &["solve"]] {
        let (_, a, _) = geoconvex(args, Some(f.path()), None);
        let (_, b, _) = geoconvex(args, Some(f.path()), None);
        assert_eq!(strip(a), strip(b), "{args:?}");
    }
}

#[test]
fn json_only_silences_stderr() {
    let f = problem(DISK);
    let (code, r, log) = geoconvex(&["project", "--point", "2,1", "--json-only"], Some(f.path()), None);
    assert_eq!(code, 0);
    assert!(log.is_empty(), "{log}");
    assert!((r["distance"].as_f64().unwrap() - (5f64.sqrt() - 1.0)).abs() < 1e-6);
}

#[test]
fn input_digest_is_sha256_of_the_file() {
    let f = problem("manifold = euclidean\n");
    let (code, r, _) = geoconvex(&["solve"], Some(f.path()), None);
    assert_eq!(code, 2);
    // sha256sum of the same bytes
    assert_eq!(r["input_digest"], "b683cc35c93245a3d9c30fafe46498c2b16c55d914584fce5cb7c93feb1a5ab0");
}
