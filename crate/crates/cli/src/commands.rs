use std::time::Instant;

use geoconvex::cone::{normal_cone_generators, probe_duality};
use geoconvex::kkt::{check_cq, check_fritz_john, check_kkt, descent_normality, solve, ProblemSpec};
use geoconvex::manifold::Point;
use geoconvex::region::{ConvexRegion, Membership, VI_TOL};
use geoconvex::sampling::derive_seed;
use geoconvex::separation::{
    linearize, separate, supporting_plane, DEFAULT_PROBES, DEFAULT_SUPPORT_STEPS, LINEARIZATION_TOL,
    SEPARATION_TOL, SUPPORT_TOL,
};
use geoconvex::verify::{run_all, CheckRecord, CheckStatus};

use crate::error::CliError;
use crate::problem::{coordinates, ProblemFile};
use crate::report::Report;

/// Probe count for the cone, kkt and solve commands unless overridden.
pub const DEFAULT_CONE_PROBES: usize = 200;
/// Tolerance on the sampled normal-cone condition at a solver output.
pub const NORMALITY_TOL: f64 = 1e-5;
/// A supporting plane must pass through its base point to this accuracy.
pub const BASE_ON_PLANE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Project,
    Separate,
    Support,
    Cone,
    Kkt,
    Solve,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Project => "project",
            Command::Separate => "separate",
            Command::Support => "support",
            Command::Cone => "cone",
            Command::Kkt => "kkt",
            Command::Solve => "solve",
            Command::Verify => "verify",
        }
    }
}

/// Everything one run depends on. The environment seed is passed in
/// explicitly so runs are reproducible in-process.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub command: Option<Command>,
    /// Problem file contents.
    pub input: Option<String>,
    pub point: Option<String>,
    pub seed: Option<u64>,
    pub env_seed: Option<String>,
    pub probes: Option<usize>,
    pub use_start: bool,
}

impl Invocation {
    pub fn new(command: Command) -> Self {
        Invocation { command: Some(command), ..Default::default() }
    }

    pub fn input(mut self, text: &str) -> Self {
        self.input = Some(text.to_string());
        self
    }

    pub fn point(mut self, point: &str) -> Self {
        self.point = Some(point.to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn use_start(mut self) -> Self {
        self.use_start = true;
        self
    }
}

pub struct Outcome {
    pub report: Report,
    /// Human-readable progress lines, meant for stderr.
    pub log: Vec<String>,
}

/// Flag, then environment, then the file, then zero.
fn resolve_seed(inv: &Invocation, file: Option<&ProblemFile>) -> Result<u64, CliError> {
    if let Some(s) = inv.seed {
        return Ok(s);
    }
    if let Some(env) = &inv.env_seed {
        return env
            .trim()
            .parse()
            .map_err(|_| CliError::Argument(format!("GEOCONVEX_SEED=`{env}` is not an unsigned integer")));
    }
    Ok(file.and_then(|f| f.seed).unwrap_or(0))
}

pub fn run(inv: &Invocation) -> Outcome {
    let started = Instant::now();
    let command = inv.command.unwrap_or(Command::Verify);
    let input = inv.input.as_deref().unwrap_or("");
    let mut report = Report::new(command.name(), input.as_bytes(), 0);
    let mut log = Vec::new();

    let result = (|| -> Result<(), CliError> {
        let file = match &inv.input {
            Some(text) => Some(ProblemFile::parse(text)?),
            None if command == Command::Verify => None,
            None => return Err(CliError::Argument(format!("`{}` needs a problem file", command.name()))),
        };
        report.seed = resolve_seed(inv, file.as_ref())?;
        match (command, file) {
            (Command::Verify, _) => verify(&mut report, &mut log),
            (_, Some(f)) => dispatch(command, &f, inv, &mut report, &mut log),
            (_, None) => unreachable!(),
        }
    })();

    match result {
        Ok(()) => report.finish(),
        Err(e) => {
            log.push(format!("error ({}): {e}", e.kind()));
            report.fail_with(&e);
        }
    }
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    log.push(format!("{}: {} (exit {})", command.name(), report.status, report.exit_code));
    Outcome { report, log }
}

fn user_point(region: &ConvexRegion, inv: &Invocation) -> Result<Point, CliError> {
    let text = inv.point.as_deref().ok_or_else(|| CliError::Argument("--point is required".into()))?;
    let coords = coordinates(text).map_err(CliError::Argument)?;
    Ok(region.manifold().project_point(coords)?)
}

fn coords(p: &Point) -> Vec<f64> {
    p.coords().to_vec()
}

fn dispatch(command: Command, file: &ProblemFile, inv: &Invocation, r: &mut Report, log: &mut Vec<String>) -> Result<(), CliError> {
    let region = file.region()?;
    let seed = r.seed;
    r.set("manifold", region.manifold().kind().name());
    r.set("dim", region.manifold().dim());
    match command {
        Command::Project => project(&region, user_point(&region, inv)?, r, log),
        Command::Separate => {
            let y = user_point(&region, inv)?;
            separate_cmd(&region, y, inv.probes.unwrap_or(DEFAULT_PROBES), seed, r, log)
        }
        Command::Support => support(&region, user_point(&region, inv)?, seed, r, log),
        Command::Cone => cone(&region, user_point(&region, inv)?, inv.probes.unwrap_or(DEFAULT_CONE_PROBES), seed, r, log),
        Command::Kkt => {
            let problem = file.problem(region)?;
            let x = if inv.use_start {
                problem.start.clone()
            } else if inv.point.is_some() {
                user_point(&problem.region, inv)?
            } else {
                return Err(CliError::Argument("kkt needs --point or --use-start".into()));
            };
            kkt(&problem, x, inv.probes.unwrap_or(DEFAULT_CONE_PROBES), seed, r, log)
        }
        Command::Solve => {
            let problem = file.problem(region)?;
            solve_cmd(&problem, inv.probes.unwrap_or(DEFAULT_CONE_PROBES), seed, r, log)
        }
        Command::Verify => unreachable!(),
    }
}

fn project(region: &ConvexRegion, q: Point, r: &mut Report, log: &mut Vec<String>) -> Result<(), CliError> {
    let membership = region.member(&q)?;
    let res = region.project(&q)?;
    log.push(format!(
        "q is {membership}; Pr(q) = {:?} at distance {:.6e} after {} iterations",
        res.q_star.coords(),
        res.distance,
        res.iterations
    ));
    r.set("input_membership", membership.to_string());
    r.set("q", coords(&q));
    r.set("q_star", coords(&res.q_star));
    r.set("distance", res.distance);
    r.set("vi_residual", res.vi_residual);
    r.set("iterations", res.iterations);
    r.set("converged", res.converged);
    r.check(CheckRecord::at_most("projection.vi_residual", res.vi_residual, VI_TOL));
    r.check(CheckRecord::flag("projection.feasible", region.member(&res.q_star)? != Membership::Exterior));
    Ok(())
}

fn separate_cmd(region: &ConvexRegion, y: Point, probes: usize, seed: u64, r: &mut Report, log: &mut Vec<String>) -> Result<(), CliError> {
    let cert = separate(region, &y, probes, seed)?;
    let lin = linearize(&cert.plane, region, probes, derive_seed(seed, 1))?;
    let u = cert.plane.direction();
    log.push(format!(
        "plane at {:?}: <u, log y> = {:.6e}, sup over {} probes = {:.3e}",
        cert.plane.base().coords(),
        cert.point_value,
        cert.probes_used,
        cert.set_sup
    ));
    r.set("y", coords(&y));
    r.set("base", coords(cert.plane.base()));
    r.set("direction", u.coords().to_vec());
    r.set("offset", cert.plane.offset());
    r.set("point_value", cert.point_value);
    r.set("set_sup", cert.set_sup);
    r.set("margin", cert.margin);
    r.set("probes_used", cert.probes_used);
    r.set("linearization_samples", lin.cone_samples);
    r.set("linearization_max", lin.max_cone_value);
    r.check(CheckRecord::at_most("separation.set_sup", cert.set_sup, SEPARATION_TOL * u.norm()));
    r.check(CheckRecord::flag("separation.point_positive", cert.point_value > 0.0));
    r.check(CheckRecord::at_most("separation.linearization", lin.max_cone_value, LINEARIZATION_TOL));
    Ok(())
}

fn support(region: &ConvexRegion, p: Point, seed: u64, r: &mut Report, log: &mut Vec<String>) -> Result<(), CliError> {
    let sp = supporting_plane(region, &p, DEFAULT_SUPPORT_STEPS, seed)?;
    let on_plane = sp.plane.evaluate(&p)?.abs();
    log.push(format!(
        "supporting plane after {} steps (converged: {}), sup = {:.3e}",
        sp.steps, sp.converged, sp.sup
    ));
    r.set("base", coords(&p));
    r.set("normal", sp.plane.unit_normal().coords().to_vec());
    r.set("witness", coords(&sp.witness));
    r.set("steps", sp.steps);
    r.set("converged", sp.converged);
    r.set("sup", sp.sup);
    r.check(CheckRecord::at_most("support.sup", sp.sup, SUPPORT_TOL));
    r.check(CheckRecord::at_most("support.base_on_plane", on_plane, BASE_ON_PLANE_TOL));
    Ok(())
}

fn cone(region: &ConvexRegion, p: Point, probes: usize, seed: u64, r: &mut Report, log: &mut Vec<String>) -> Result<(), CliError> {
    let normal = normal_cone_generators(region, &p)?;
    let d = probe_duality(region, &p, probes, seed)?;
    log.push(format!(
        "{} generators; {} probes: {} in, {} out, {} undecided",
        d.generators, d.probes, d.in_cone, d.not_in_cone, d.undecided
    ));
    r.set("point", coords(&p));
    r.set("membership", region.member(&p)?.to_string());
    r.set("active", region.active_set(&p)?);
    r.set("generators", normal.generators().len());
    r.set("probes", d.probes);
    r.set("in_cone", d.in_cone);
    r.set("not_in_cone", d.not_in_cone);
    r.set("undecided", d.undecided);
    r.set("polar_mismatches", d.polar_mismatches);
    r.set("test_disagreements", d.test_disagreements);
    r.set("max_linearization", d.max_linearization);
    r.check(CheckRecord::at_most("cone.polar_mismatches", d.polar_mismatches as f64, 0.0));
    r.check(CheckRecord::at_most("cone.test_disagreements", d.test_disagreements as f64, 0.0));
    r.check(CheckRecord::at_most("cone.linearization", d.max_linearization, LINEARIZATION_TOL));
    Ok(())
}

// Certificate fields and checks shared by kkt and solve.
fn certify(problem: &ProblemSpec, x: &Point, r: &mut Report, log: &mut Vec<String>) -> Result<(), CliError> {
    let tol = problem.tolerances;
    let cert = check_kkt(problem, x)?;
    log.push(format!(
        "KKT at {:?}: residual {:.3e}, multipliers {:?}, certified {}",
        x.coords(),
        cert.stationarity_residual,
        cert.multipliers,
        cert.certified
    ));
    r.set("point", coords(x));
    r.set("objective_value", problem.objective.evaluate(x).map_err(geoconvex::Error::from)?);
    r.set("feasible", cert.feasible);
    r.set("active", cert.active.clone());
    r.set("multipliers", cert.multipliers.clone());
    r.set("stationarity_residual", cert.stationarity_residual);
    r.set("max_complementarity", cert.max_complementarity());
    r.set("kkt_certified", cert.certified);
    r.check(CheckRecord::flag("kkt.feasible", cert.feasible));
    r.check(CheckRecord::at_most("kkt.stationarity", cert.stationarity_residual, tol.stationarity_tol));
    r.check(CheckRecord::at_most("kkt.complementarity", cert.max_complementarity(), tol.complementarity_tol));
    Ok(())
}

fn kkt(problem: &ProblemSpec, x: Point, probes: usize, seed: u64, r: &mut Report, log: &mut Vec<String>) -> Result<(), CliError> {
    certify(problem, &x, r, log)?;
    let fj = check_fritz_john(problem, &x)?;
    log.push(format!(
        "Fritz-John: lambda0 {:.6}, residual {:.3e}, certified {}",
        fj.lambda0, fj.stationarity_residual, fj.certified
    ));
    r.set("fj_lambda0", fj.lambda0);
    r.set("fj_multipliers", fj.multipliers.clone());
    r.set("fj_residual", fj.stationarity_residual);
    r.set("fj_certified", fj.certified);
    r.check(CheckRecord::at_most("fj.stationarity", fj.stationarity_residual, problem.tolerances.stationarity_tol));
    // Sampling cannot prove a constraint qualification, so this stays advisory.
    if problem.region.member(&x)? == Membership::Boundary {
        let cq = check_cq(problem, &x, probes, seed)?;
        log.push(format!("CQ sample: {} inside, {} counterexamples", cq.inside, cq.counterexamples));
        r.set("cq_fraction", cq.fraction);
        r.set("cq_counterexamples", cq.counterexamples);
    }
    Ok(())
}

fn solve_cmd(problem: &ProblemSpec, probes: usize, seed: u64, r: &mut Report, log: &mut Vec<String>) -> Result<(), CliError> {
    let out = solve(problem)?;
    let stride = (out.trace.len() / 20).max(1);
    for (k, it) in out.trace.iter().enumerate() {
        if k % stride == 0 || k + 1 == out.trace.len() {
            log.push(format!("iter {k:5}  f = {:.12e}  step = {:.3e}  moved = {:.3e}", it.value, it.step, it.moved));
        }
    }
    log.push(format!("stopped: {:?} after {} iterations", out.stop, out.trace.len()));
    r.set("start", coords(&problem.start));
    r.set("iterations", out.trace.len());
    r.set("stop", serde_json::to_value(out.stop).expect("stop reasons serialize"));
    certify(problem, &out.point, r, log)?;
    let normality = descent_normality(problem, &out.point, probes, seed)?;
    r.set("normal_cone_probe", normality);
    r.check(CheckRecord::at_most("solve.normal_cone_probe", normality, NORMALITY_TOL));
    Ok(())
}

fn verify(r: &mut Report, log: &mut Vec<String>) -> Result<(), CliError> {
    let seed = r.seed;
    let reports = run_all(seed);
    let mut lines = Vec::new();
    for c in &reports {
        lines.push((c.id, c.title, c.status(), c.checks.clone()));
    }
    let eleven = crate::corpus::criterion_eleven(seed, &reports);
    lines.push((11, crate::corpus::CRITERION_ELEVEN, geoconvex::verify::aggregate(eleven.iter().map(|c| c.status)), eleven));

    let mut by_status: [Vec<u8>; 3] = Default::default();
    for (id, title, status, checks) in lines {
        log.push(format!("criterion {id:2} {title}: {status}"));
        for c in checks.iter().filter(|c| c.status != CheckStatus::Pass) {
            log.push(format!("    {} {}: value {:e}, tolerance {:e}", c.status, c.name, c.value, c.tolerance));
        }
        let slot = match status {
            CheckStatus::Pass => 0,
            CheckStatus::Fail => 1,
            CheckStatus::Inconclusive => 2,
        };
        by_status[slot].push(id);
        r.checks.extend(checks);
    }
    let [passed, failed, inconclusive] = by_status;
    r.set("criteria_passed", passed);
    r.set("criteria_failed", failed);
    r.set("criteria_inconclusive", inconclusive);
    Ok(())
}
