use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use geoconvex_cli::{run, CliError, Command, Invocation, Report};

/// Geodesic convexity toolkit: projections, separation, cones and KKT
/// certificates on Euclidean space, the sphere and the hyperboloid.
#[derive(Debug, Parser)]
#[command(name = "geoconvex", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Problem file (optional for `verify`).
    file: Option<PathBuf>,
    /// Point coordinates, comma separated: --point "1,0,0".
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Overrides GEOCONVEX_SEED and the file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random probes for sampling-based checks.
    #[arg(long)]
    probes: Option<usize>,
    /// For `kkt`: certify the file's start point.
    #[arg(long)]
    use_start: bool,
    /// Suppress the human-readable log on stderr.
    #[arg(long)]
    json_only: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut inv = Invocation {
        command: Some(args.command),
        input: None,
        point: args.point,
        seed: args.seed,
        env_seed: std::env::var("GEOCONVEX_SEED").ok(),
        probes: args.probes,
        use_start: args.use_start,
    };

    let report = match &args.file {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => {
                inv.input = Some(text);
                None
            }
            Err(e) => {
                let err = CliError::Io { path: path.display().to_string(), message: e.to_string() };
                let mut r = Report::new(args.command.name(), b"", 0);
                r.fail_with(&err);
                if !args.json_only {
                    let _ = writeln!(std::io::stderr(), "error: {err}");
                }
                Some(r)
            }
        },
        None => None,
    };

    let report = report.unwrap_or_else(|| {
        let outcome = run(&inv);
        if !args.json_only {
            let mut stderr = std::io::stderr().lock();
            for line in &outcome.log {
                let _ = writeln!(stderr, "{line}");
            }
        }
        outcome.report
    });
    // A closed pipe (`| head`) is not worth a panic.
    let _ = writeln!(std::io::stdout(), "{}", report.to_json());
    ExitCode::from(report.exit_code as u8)
}
