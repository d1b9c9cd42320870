//! One line per acceptance criterion; exits non-zero if any criterion fails.

use geoconvex::verify::{aggregate, run_all, CheckStatus};
use geoconvex_cli::corpus::{criterion_eleven, CRITERION_ELEVEN};

fn main() {
    let seed = 0;
    let reports = run_all(seed);
    let eleven = criterion_eleven(seed, &reports);
    let mut rows: Vec<_> = reports.iter().map(|r| (r.id, r.title, r.status(), r.checks.clone())).collect();
    rows.push((11, CRITERION_ELEVEN, aggregate(eleven.iter().map(|c| c.status)), eleven));

    let mut failed = 0;
    for (id, title, status, checks) in rows {
        let label = match status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Inconclusive => "INCONCLUSIVE",
        };
        println!("criterion {id:2} {label:12} {title}");
        for c in checks.iter().filter(|c| c.status != CheckStatus::Pass) {
            println!("    {} {}: value {:e}, tolerance {:e}", c.status, c.name, c.value, c.tolerance);
        }
        if status != CheckStatus::Pass {
            failed += 1;
        }
    }
    println!("{failed} of 11 criteria not passing");
    if failed > 0 {
        std::process::exit(1);
    }
}
