//! Built-in problems with their expected exit codes, and the determinism
//! criterion that `verify` runs on top of the library suite.

use geoconvex::verify::{run_all, CheckRecord, CriterionReport};

use crate::commands::{run, Command, Invocation};

pub const DISK: &str = include_str!("../corpus/disk.problem");
pub const CAP: &str = include_str!("../corpus/cap.problem");
pub const HYPERBOLIC: &str = include_str!("../corpus/hyperbolic.problem");
pub const MALFORMED: &str = include_str!("../corpus/malformed.problem");

pub const CRITERION_ELEVEN: &str = "determinism and exit codes";

pub struct Case {
    pub name: &'static str,
    pub invocation: Invocation,
    pub expected_exit: i32,
}

fn case(name: &'static str, input: &str, command: Command, point: Option<&str>, expected_exit: i32) -> Case {
    let mut invocation = Invocation::new(command).input(input);
    if let Some(p) = point {
        invocation = invocation.point(p);
    }
    Case { name, invocation, expected_exit }
}

pub fn cases() -> Vec<Case> {
    use Command::*;
    vec![
        case("disk_solve", DISK, Solve, None, 0),
        case("disk_kkt_minimizer", DISK, Kkt, Some("-1,0"), 0),
        case("disk_kkt_centre", DISK, Kkt, Some("0,0"), 1),
        case("disk_project", DISK, Project, Some("2,1"), 0),
        case("disk_separate", DISK, Separate, Some("2,1"), 0),
        case("disk_separate_interior", DISK, Separate, Some("0.1,0.1"), 2),
        case("disk_support", DISK, Support, Some("0,1"), 0),
        case("disk_support_interior", DISK, Support, Some("0.5,0"), 2),
        case("disk_cone", DISK, Cone, Some("1,0"), 0),
        case("disk_missing_point", DISK, Project, None, 2),
        case("cap_solve", CAP, Solve, None, 0),
        case("hyperbolic_solve", HYPERBOLIC, Solve, None, 0),
        case("malformed_solve", MALFORMED, Solve, None, 2),
    ]
}

/// Reruns the suite and every corpus case, requiring identical reports
/// (timing aside) and the documented exit codes.
pub fn criterion_eleven(seed: u64, first: &[CriterionReport]) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let again = run_all(seed);
    let same = first.len() == again.len() && first.iter().zip(&again).all(|(a, b)| a.checks == b.checks || same_bits(a, b));
    out.push(CheckRecord::flag("11.suite.rerun_identical", same));

    for c in cases() {
        let a = run(&c.invocation);
        let b = run(&c.invocation);
        out.push(CheckRecord::flag(
            format!("11.{}.exit_code", c.name),
            a.report.exit_code == c.expected_exit,
        ));
        out.push(CheckRecord::flag(format!("11.{}.rerun_identical", c.name), a.report.canonical() == b.report.canonical()));
        if c.name == "disk_solve" {
            let d = a.report.fields.get("point").and_then(|p| p.as_array()).map(|p| {
                let x: Vec<f64> = p.iter().filter_map(|v| v.as_f64()).collect();
                ((x[0] + 1.0).powi(2) + x[1].powi(2)).sqrt()
            });
            out.push(CheckRecord::at_most("11.disk_solve.distance_to_minimizer", d.unwrap_or(f64::NAN), 1e-5));
        }
    }
    out
}

// NaN values never compare equal, so compare bit patterns.
fn same_bits(a: &CriterionReport, b: &CriterionReport) -> bool {
    a.checks.len() == b.checks.len()
        && a.checks.iter().zip(&b.checks).all(|(x, y)| {
            x.name == y.name
                && x.status == y.status
                && x.value.to_bits() == y.value.to_bits()
                && x.tolerance.to_bits() == y.tolerance.to_bits()
        })
}
