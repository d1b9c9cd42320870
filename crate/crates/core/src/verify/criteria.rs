use rand::Rng;

use super::instances::{affine_instance, boundary_instance, inner_ball_through, projection_instance, KINDS};
use super::oracle::{affine_multipliers, projection_distance_2d};
use super::CheckRecord;
use crate::cone::{normal_cone_generators, probe_duality, tangent_cone_member, ConeVerdict};
use crate::error::{Error, Result};
use crate::expr::parse;
use crate::kkt::{check_fritz_john, check_kkt, descent_normality, solve, KKTCertificate, ProblemSpec};
use crate::manifold::{convexity_radius_bound, ManifoldKind, ManifoldSpec, Point};
use crate::region::{ConvexRegion, VI_TOL};
use crate::sampling::{derive_seed, rng, tangent_in_ball, unit_tangent};
use crate::separation::{separate, supporting_plane, DEFAULT_PROBES, DEFAULT_SUPPORT_STEPS, SUPPORT_TOL};

const PROJECTION_INSTANCES: usize = 100;
const ORACLE_INSTANCES_PER_KIND: usize = 10;
const BOUNDARY_POINTS: usize = 50;
const CONE_POINTS_PER_KIND: usize = 8;
const CONE_PROBES_PER_POINT: usize = 420;
const AFFINE_INSTANCES: usize = 20;

fn criterion_seed(seed: u64, id: u64) -> u64 {
    derive_seed(seed, id)
}

fn instance_seed(base: u64, kind_index: usize, i: usize) -> u64 {
    derive_seed(base, (kind_index * 100_000 + i) as u64)
}

fn name(id: u8, kind: ManifoldKind, what: &str) -> String {
    format!("{id}.{kind}.{what}")
}

fn random_point(m: ManifoldSpec, rng: &mut impl Rng) -> Result<Point> {
    let radius = match m.kind() {
        ManifoldKind::Euclidean => 5.0,
        ManifoldKind::Sphere => 0.999 * std::f64::consts::PI,
        ManifoldKind::Hyperboloid => 2.0,
    };
    tangent_in_ball(&m.origin(), radius, rng).exp()
}

pub(super) fn geometry_roundtrip(seed: u64) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for (k, kind) in KINDS.into_iter().enumerate() {
        let mut rng = rng(derive_seed(criterion_seed(seed, 1), k as u64));
        let m = ManifoldSpec::new(kind, 3).expect("valid manifold");
        let run = |rng: &mut _| -> Result<(f64, f64)> {
            let (mut log_err, mut dist_err) = (0.0_f64, 0.0_f64);
            for _ in 0..1000 {
                let p = random_point(m, rng)?;
                let v = tangent_in_ball(&p, 0.9 * convexity_radius_bound(&p).min(3.0), rng);
                let q = v.exp()?;
                log_err = log_err.max(p.log(&q)?.sub(&v)?.norm());
                dist_err = dist_err.max((p.dist(&q)? - v.norm()).abs());
            }
            Ok((log_err, dist_err))
        };
        match run(&mut rng) {
            Ok((log_err, dist_err)) => {
                out.push(CheckRecord::at_most(name(1, kind, "log_exp_roundtrip"), log_err, 1e-8));
                out.push(CheckRecord::at_most(name(1, kind, "dist_exp_norm"), dist_err, 1e-9));
            }
            Err(e) => out.push(CheckRecord::from_error(name(1, kind, "roundtrip"), &e)),
        }
    }
    out
}

// d(γ₁(t), γ₂(t)) ≤ (1−t)·d(γ₁(0), γ₂(0)) + t·d(γ₁(1), γ₂(1)) on random
// geodesic pairs inside a ball of half the convexity radius.
pub(super) fn distance_convexity(seed: u64) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for (k, kind) in KINDS.into_iter().enumerate() {
        let mut rng = rng(derive_seed(criterion_seed(seed, 2), k as u64));
        let m = ManifoldSpec::new(kind, 2).expect("valid manifold");
        let o = m.origin();
        let radius = 0.9 * (0.5 * convexity_radius_bound(&o)).min(2.0);
        let run = |rng: &mut _| -> Result<f64> {
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..1000 {
                let pts: Vec<Point> = (0..4).map(|_| tangent_in_ball(&o, radius, rng).exp()).collect::<Result<_>>()?;
                let (v1, v2) = (pts[0].log(&pts[1])?, pts[2].log(&pts[3])?);
                let (d0, d1) = (pts[0].dist(&pts[2])?, pts[1].dist(&pts[3])?);
                for t in [0.25, 0.5, 0.75] {
                    let d = v1.scale(t).exp()?.dist(&v2.scale(t).exp()?)?;
                    worst = worst.max(d - ((1.0 - t) * d0 + t * d1));
                }
            }
            Ok(worst)
        };
        out.push(match run(&mut rng) {
            Ok(v) => CheckRecord::at_most(name(2, kind, "max_violation"), v, 1e-9),
            Err(e) => CheckRecord::from_error(name(2, kind, "convexity"), &e),
        });
    }
    out
}

pub(super) fn projection_vi(seed: u64) -> Vec<CheckRecord> {
    let base = criterion_seed(seed, 3);
    let mut out = Vec::new();
    for (k, kind) in KINDS.into_iter().enumerate() {
        let (mut certified, mut other) = (0usize, 0usize);
        let mut worst_vi = f64::NEG_INFINITY;
        for i in 0..PROJECTION_INSTANCES {
            let result = projection_instance(kind, instance_seed(base, k, i)).and_then(|inst| inst.region.project(&inst.q));
            match result {
                Ok(r) => {
                    certified += 1;
                    worst_vi = worst_vi.max(r.vi_residual);
                }
                Err(Error::ProjectionNotCertified { .. }) => {}
                Err(_) => other += 1,
            }
        }
        out.push(CheckRecord::at_least(name(3, kind, "certified"), certified as f64, 95.0));
        out.push(CheckRecord::at_most(name(3, kind, "max_vi_residual"), worst_vi, VI_TOL));
        out.push(CheckRecord::at_most(name(3, kind, "uncertified_other_errors"), other as f64, 0.0));
    }
    out
}

pub(super) fn projection_oracle(seed: u64) -> Vec<CheckRecord> {
    let base = criterion_seed(seed, 4);
    let mut out = Vec::new();
    for (k, kind) in KINDS.into_iter().enumerate() {
        let mut worst = 0.0_f64;
        let mut errors = Vec::new();
        for i in 0..ORACLE_INSTANCES_PER_KIND {
            let run = || -> Result<f64> {
                let inst = projection_instance(kind, instance_seed(base, k, i))?;
                let oracle = projection_distance_2d(&inst.region, &inst.q)?;
                let got = inst.region.project(&inst.q)?.distance;
                Ok((got - oracle).abs())
            };
            match run() {
                Ok(d) => worst = worst.max(d),
                Err(e) => errors.push(e),
            }
        }
        out.push(CheckRecord::at_most(name(4, kind, "max_distance_gap"), worst, 1e-4));
        out.extend(errors.iter().map(|e| CheckRecord::from_error(name(4, kind, "instance"), e)));
    }
    out
}

pub(super) fn separation(seed: u64) -> Vec<CheckRecord> {
    let base = criterion_seed(seed, 3);
    let probe_seed = criterion_seed(seed, 5);
    let mut out = Vec::new();
    for (k, kind) in KINDS.into_iter().enumerate() {
        let (mut sup_ratio, mut value_gap, mut min_value) = (f64::NEG_INFINITY, 0.0_f64, f64::INFINITY);
        let mut errors = Vec::new();
        let mut used = 0;
        for i in 0..PROJECTION_INSTANCES {
            let cert = projection_instance(kind, instance_seed(base, k, i))
                .and_then(|inst| separate(&inst.region, &inst.q, DEFAULT_PROBES, derive_seed(probe_seed, i as u64)));
            match cert {
                Ok(c) => {
                    used += 1;
                    let un = c.plane.direction().norm();
                    sup_ratio = sup_ratio.max(c.set_sup / un);
                    value_gap = value_gap.max((c.point_value - un * un).abs());
                    min_value = min_value.min(c.point_value);
                }
                // not a certified instance of the projection criterion
                Err(Error::ProjectionNotCertified { .. }) => {}
                Err(e) => errors.push(e),
            }
        }
        out.push(CheckRecord::at_most(name(5, kind, "set_sup_over_norm"), sup_ratio, 1e-8));
        out.push(CheckRecord::at_most(name(5, kind, "point_value_gap"), value_gap, 1e-9));
        out.push(CheckRecord::flag(name(5, kind, "point_value_positive"), used > 0 && min_value > 0.0));
        out.extend(errors.iter().map(|e| CheckRecord::from_error(name(5, kind, "instance"), e)));
    }
    out
}

pub(super) fn supporting_planes(seed: u64) -> Vec<CheckRecord> {
    let base = criterion_seed(seed, 6);
    let (mut certified, mut uncertified) = (0usize, 0usize);
    let (mut worst_sup, mut worst_contain) = (f64::NEG_INFINITY, 0.0_f64);
    let mut errors = Vec::new();
    for i in 0..BOUNDARY_POINTS {
        let k = i % KINDS.len();
        let kind = KINDS[k];
        let run = || -> Result<(f64, f64)> {
            let (region, p) = boundary_instance(kind, instance_seed(base, k, i))?;
            let s = supporting_plane(&region, &p, DEFAULT_SUPPORT_STEPS, derive_seed(base, i as u64))?;
            Ok((s.sup, s.plane.evaluate(&p)?.abs()))
        };
        match run() {
            Ok((sup, contain)) => {
                certified += 1;
                worst_sup = worst_sup.max(sup);
                worst_contain = worst_contain.max(contain);
            }
            Err(Error::SupportNotCertified { .. }) => uncertified += 1,
            Err(e) => errors.push(CheckRecord::from_error(format!("6.{kind}.point{i}"), &e)),
        }
    }
    let mut out = vec![
        CheckRecord::at_least("6.certified", certified as f64, 48.0),
        CheckRecord::at_most("6.not_certified", uncertified as f64, 2.0),
        CheckRecord::at_most("6.max_sup", worst_sup, SUPPORT_TOL),
        CheckRecord::at_most("6.base_on_plane", worst_contain, 1e-10),
    ];
    out.extend(errors);
    out
}

struct ConeTotals {
    probes: usize,
    mismatches: usize,
    disagreements: usize,
    undecided: usize,
    linearization: f64,
    monotonicity: f64,
}

fn cone_point(region: &ConvexRegion, p: &Point, seed: u64, totals: &mut ConeTotals) -> Result<()> {
    let rep = probe_duality(region, p, CONE_PROBES_PER_POINT, seed)?;
    totals.probes += rep.probes;
    totals.mismatches += rep.polar_mismatches;
    totals.disagreements += rep.test_disagreements;
    totals.undecided += rep.undecided;
    totals.linearization = totals.linearization.max(rep.max_linearization);

    // nested region C = D ∩ B ⊂ D sharing p: N_D(p) must be polar to T_C(p)
    let ambient = p.coords().len();
    let nested = region.with_constraints(vec![parse(&inner_ball_through(region, p)?, ambient)?])?;
    let normal_d = normal_cone_generators(region, p)?;
    let mut rng = rng(derive_seed(seed, 1));
    let mut combos = normal_d.generators().to_vec();
    for _ in 0..5 {
        let lambda: Vec<f64> = (0..normal_d.generators().len()).map(|_| rng.random::<f64>()).collect();
        combos.push(normal_d.combination(&lambda)?);
    }
    for _ in 0..50 {
        let v = unit_tangent(p, &mut rng);
        if tangent_cone_member(&nested, &v)?.verdict != ConeVerdict::InTangentCone {
            continue;
        }
        for u in &combos {
            let un = u.norm();
            if un > 0.0 {
                totals.monotonicity = totals.monotonicity.max(u.inner(&v)? / un);
            }
        }
    }
    Ok(())
}

fn corner_instance() -> Result<(ConvexRegion, Point)> {
    let m = ManifoldSpec::euclidean(2);
    let region = ConvexRegion::from_sources(m, &["x1 - 0.5", "x2 - 0.5", "x1*x1 + x2*x2 - 4"], m.origin())?;
    Ok((region, m.point(vec![0.5, 0.5])?))
}

pub(super) fn cone_duality(seed: u64) -> Vec<CheckRecord> {
    let base = criterion_seed(seed, 7);
    let mut totals =
        ConeTotals { probes: 0, mismatches: 0, disagreements: 0, undecided: 0, linearization: f64::NEG_INFINITY, monotonicity: f64::NEG_INFINITY };
    let mut errors = Vec::new();
    for (k, kind) in KINDS.into_iter().enumerate() {
        for i in 0..CONE_POINTS_PER_KIND {
            let s = instance_seed(base, k, i);
            if let Err(e) = boundary_instance(kind, s).and_then(|(region, p)| cone_point(&region, &p, s, &mut totals)) {
                errors.push(CheckRecord::from_error(format!("7.{kind}.point{i}"), &e));
            }
        }
    }
    if let Err(e) = corner_instance().and_then(|(region, p)| cone_point(&region, &p, derive_seed(base, 99), &mut totals)) {
        errors.push(CheckRecord::from_error("7.euclidean.corner", &e));
    }
    let mut out = vec![
        CheckRecord::at_least("7.probes", totals.probes as f64, 10_000.0),
        CheckRecord::at_most("7.decisive_counterexamples", totals.mismatches as f64, 0.0),
        CheckRecord::at_most("7.membership_test_disagreements", totals.disagreements as f64, 0.0),
        CheckRecord::at_most("7.linearization_inclusion", totals.linearization, 1e-6),
        CheckRecord::at_most("7.normal_cone_monotonicity", totals.monotonicity, 1e-8),
    ];
    // informational: undecided probes are excluded from the counts above
    out.push(CheckRecord::at_most("7.undecided_fraction", totals.undecided as f64 / totals.probes.max(1) as f64, 1.0));
    out.extend(errors);
    out
}

fn disk_problem(objective: &str, start: [f64; 2]) -> Result<ProblemSpec> {
    let m = ManifoldSpec::euclidean(2);
    let region = ConvexRegion::from_sources(m, &["x1*x1 + x2*x2 - 1"], m.origin())?;
    ProblemSpec::new(parse(objective, 2)?, region, m.point(start.to_vec())?)
}

fn cap_problem() -> Result<ProblemSpec> {
    let m = ManifoldSpec::sphere(2);
    let region = ConvexRegion::from_sources(m, &["gdist(1, 0, 0) - 0.5"], m.origin())?;
    ProblemSpec::new(parse("gdist(0, 0, 1)^2", 3)?, region, m.project_point(vec![0.995, 0.0998, 0.0])?)
}

/// exp_{e₁}(0.5·e₃): the nearest cap point to e₃, on the radial geodesic.
fn cap_minimizer() -> Result<Point> {
    ManifoldSpec::sphere(2).point(vec![0.5f64.cos(), 0.0, 0.5f64.sin()])
}

fn disk_min_point() -> Result<Point> {
    ManifoldSpec::euclidean(2).point(vec![-1.0, 0.0])
}

struct AffineCheck {
    problem: ProblemSpec,
    point: Point,
    oracle: Vec<f64>,
    active: Vec<usize>,
}

fn affine_checks(seed: u64) -> Vec<Result<AffineCheck>> {
    (0..AFFINE_INSTANCES)
        .map(|i| {
            let inst = affine_instance(derive_seed(seed, i as u64))?;
            let problem = ProblemSpec::new(parse(&inst.objective, 2)?, inst.region.clone(), inst.point.clone())?;
            Ok(AffineCheck {
                oracle: affine_multipliers(&inst.active_normals, &inst.objective_gradient),
                problem,
                point: inst.point,
                active: inst.active_indices,
            })
        })
        .collect()
}

pub(super) fn kkt_multipliers(seed: u64) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    match disk_problem("x1", [0.3, 0.4]).and_then(|p| check_kkt(&p, &disk_min_point()?)) {
        Ok(c) => {
            out.push(CheckRecord::at_most("8.disk.multiplier_error", (c.multipliers[0] - 0.5).abs(), 1e-7));
            out.push(CheckRecord::flag("8.disk.certified", c.certified));
        }
        Err(e) => out.push(CheckRecord::from_error("8.disk", &e)),
    }
    let cap = || -> Result<(KKTCertificate, KKTCertificate)> {
        let p = cap_problem()?;
        let solved = solve(&p)?;
        Ok((check_kkt(&p, &solved.point)?, check_kkt(&p, &cap_minimizer()?)?))
    };
    match cap() {
        Ok((at_solution, at_minimizer)) => {
            out.push(CheckRecord::at_most("8.sphere.stationarity_residual", at_solution.stationarity_residual, 1e-5));
            out.push(CheckRecord::flag("8.sphere.certified", at_solution.certified));
            out.push(CheckRecord::at_most(
                "8.sphere.multiplier_error",
                (at_minimizer.multipliers[0] - (std::f64::consts::PI - 1.0)).abs(),
                1e-5,
            ));
        }
        Err(e) => out.push(CheckRecord::from_error("8.sphere", &e)),
    }
    let (mut worst, mut all_certified) = (0.0_f64, true);
    for (i, case) in affine_checks(criterion_seed(seed, 8)).into_iter().enumerate() {
        match case.and_then(|c| Ok((check_kkt(&c.problem, &c.point)?, c))) {
            Ok((cert, c)) => {
                all_certified &= cert.certified;
                for (j, &idx) in c.active.iter().enumerate() {
                    worst = worst.max((cert.multipliers[idx] - c.oracle[j]).abs());
                }
            }
            Err(e) => out.push(CheckRecord::from_error(format!("8.affine{i}"), &e)),
        }
    }
    out.push(CheckRecord::at_most("8.affine.multiplier_error", worst, 1e-7));
    out.push(CheckRecord::flag("8.affine.certified", all_certified));
    out
}

pub(super) fn fritz_john(seed: u64) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let mut points: Vec<Result<(String, ProblemSpec, Point)>> = vec![
        disk_problem("x1", [0.3, 0.4]).and_then(|p| Ok(("disk".into(), p, disk_min_point()?))),
        cap_problem().and_then(|p| Ok(("sphere".into(), p, cap_minimizer()?))),
        cap_problem().and_then(|p| {
            let x = solve(&p)?.point;
            Ok(("sphere_solution".into(), p, x))
        }),
    ];
    for (i, case) in affine_checks(criterion_seed(seed, 8)).into_iter().enumerate() {
        points.push(case.map(|c| (format!("affine{i}"), c.problem, c.point)));
    }
    let (mut excess, mut lambda0_gap, mut certified_points) = (f64::NEG_INFINITY, 0.0_f64, 0usize);
    for case in points {
        let run = |(_, p, x): &(String, ProblemSpec, Point)| -> Result<Option<(f64, f64)>> {
            let kkt = check_kkt(p, x)?;
            if !kkt.certified {
                return Ok(None);
            }
            let scale = 1.0 + kkt.multipliers.iter().sum::<f64>();
            let fj = check_fritz_john(p, x)?;
            Ok(Some((fj.stationarity_residual - kkt.stationarity_residual / scale, (fj.lambda0 - 1.0 / scale).abs())))
        };
        match case.and_then(|c| run(&c).map(|r| (c.0, r))) {
            Ok((_, Some((e, g)))) => {
                certified_points += 1;
                excess = excess.max(e);
                lambda0_gap = lambda0_gap.max(g);
            }
            Ok((label, None)) => out.push(CheckRecord::flag(format!("9.{label}.kkt_certified"), false)),
            Err(e) => out.push(CheckRecord::from_error("9.point", &e)),
        }
    }
    out.push(CheckRecord::at_least("9.kkt_certified_points", certified_points as f64, 1.0));
    out.push(CheckRecord::at_most("9.fj_residual_excess", excess, 1e-8));
    out.push(CheckRecord::at_most("9.fj_lambda0_rescaling", lambda0_gap, 1e-6));

    let degenerate = || -> Result<(KKTCertificate, KKTCertificate)> {
        let m = ManifoldSpec::euclidean(2);
        let region = ConvexRegion::builder(m)
            .parse_constraint("(x1 - 1)^3")?
            .anchor(m.origin())
            .skip_convexity_check()
            .build()?;
        let p = ProblemSpec::new(parse("-x1", 2)?, region, m.origin())?;
        let x = m.point(vec![1.0, 0.0])?;
        Ok((check_fritz_john(&p, &x)?, check_kkt(&p, &x)?))
    };
    match degenerate() {
        Ok((fj, kkt)) => {
            out.push(CheckRecord::at_most("9.degenerate.fj_lambda0", fj.lambda0, 1e-6));
            out.push(CheckRecord::flag("9.degenerate.fj_certified", fj.certified));
            out.push(CheckRecord::flag("9.degenerate.kkt_rejected", !kkt.certified));
        }
        Err(e) => out.push(CheckRecord::from_error("9.degenerate", &e)),
    }
    out
}

pub(super) fn solver_sanity(seed: u64) -> Vec<CheckRecord> {
    let probe_seed = criterion_seed(seed, 10);
    let cases: Vec<(&str, Result<(ProblemSpec, Point)>)> = vec![
        (
            "distance",
            disk_problem("gdist(0.2, -0.3)^2", [0.3, 0.4])
                .and_then(|p| Ok((p, ManifoldSpec::euclidean(2).point(vec![0.2, -0.3])?))),
        ),
        ("disk", disk_problem("x1", [0.3, 0.4]).and_then(|p| Ok((p, disk_min_point()?)))),
        ("sphere", cap_problem().and_then(|p| Ok((p, cap_minimizer()?)))),
    ];
    let mut out = Vec::new();
    for (label, case) in cases {
        let run = |(p, target): (ProblemSpec, Point)| -> Result<(f64, f64)> {
            let x = solve(&p)?.point;
            Ok((x.dist(&target)?, descent_normality(&p, &x, 200, probe_seed)?))
        };
        match case.and_then(run) {
            Ok((d, normal)) => {
                out.push(CheckRecord::at_most(format!("10.{label}.distance_to_minimizer"), d, 1e-4));
                out.push(CheckRecord::at_most(format!("10.{label}.normal_cone_probe"), normal, 1e-5));
            }
            Err(e) => out.push(CheckRecord::from_error(format!("10.{label}"), &e)),
        }
    }
    out
}
