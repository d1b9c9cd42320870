//! Projected Riemannian gradient descent over a region and first-order
//! optimality certificates (KKT and Fritz-John).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cone::{nonneg_combination, tangent_cone_member, tangent_cone_member_seq, ConeVerdict, GeneratedCone};
use crate::error::{Error, Result};
use crate::expr::{riemannian_grad, Expr};
use crate::manifold::{ManifoldSpec, Point, TangentVector};
use crate::region::{ConvexRegion, Membership};
use crate::sampling::{rng, unit_tangent};

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-16;
const STALL_DIST: f64 = 1e-10;
// The trial step doubles after each accepted step, up to this multiple of step_init.
const MAX_STEP_GROWTH: f64 = 1024.0;
// Active gradients shorter than this carry no direction information; KKT
// multipliers on them would be arbitrarily large.
const NEGLIGIBLE_GRADIENT: f64 = 1e-8;
const SIMPLEX_ITERS: usize = 1000;
const CQ_DRAW_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub stationarity_tol: f64,
    pub complementarity_tol: f64,
    pub step_init: f64,
    pub max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { stationarity_tol: 1e-5, complementarity_tol: 1e-6, step_init: 1.0, max_iters: 5000 }
    }
}

/// min f(x) subject to x in the region.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub objective: Expr,
    pub region: ConvexRegion,
    pub start: Point,
    pub tolerances: Tolerances,
}

impl ProblemSpec {
    pub fn new(objective: Expr, region: ConvexRegion, start: Point) -> Result<Self> {
        let m = region.manifold();
        if start.manifold() != m {
            return Err(Error::ManifoldMismatch { left: m, right: start.manifold() });
        }
        if objective.ambient_dim() != m.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: m.ambient_dim(), got: objective.ambient_dim() });
        }
        let f0 = objective.evaluate(&start)?;
        if !f0.is_finite() {
            return Err(Error::NumericalBreakdown { iteration: 0, what: "objective is not finite at the start".into() });
        }
        Ok(ProblemSpec { objective, region, start, tolerances: Tolerances::default() })
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn manifold(&self) -> ManifoldSpec {
        self.region.manifold()
    }

    fn value(&self, x: &Point, iteration: usize) -> Result<f64> {
        let v = self.objective.evaluate(x)?;
        if !v.is_finite() {
            return Err(Error::NumericalBreakdown { iteration, what: "non-finite objective".into() });
        }
        Ok(v)
    }

    fn gradient(&self, x: &Point, iteration: usize) -> Result<TangentVector> {
        riemannian_grad(&self.objective, x).map_err(|e| match e {
            Error::NumericalBreakdown { what, .. } => Error::NumericalBreakdown { iteration, what },
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Iteration {
    pub value: f64,
    pub step: f64,
    pub moved: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stalled,
    Stationary,
    MaxIters,
    StepUnderflow,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub point: Point,
    pub trace: Vec<Iteration>,
    pub stop: StopReason,
}

/// x ← Pr(exp_x(−t grad f(x))) with Armijo backtracking on f.
pub fn solve(problem: &ProblemSpec) -> Result<SolveOutcome> {
    let tol = problem.tolerances;
    let region = &problem.region;
    let mut x = problem.start.clone();
    if region.member(&x)? == Membership::Exterior {
        x = region.project(&x)?.q_star;
    }
    let mut trace = Vec::new();
    let mut t0 = tol.step_init;
    for k in 0..tol.max_iters {
        let fx = problem.value(&x, k)?;
        let g = problem.gradient(&x, k)?;
        if g.is_zero() {
            return Ok(SolveOutcome { point: x, trace, stop: StopReason::Stationary });
        }
        let Some((next, t)) = armijo(problem, &x, fx, &g, t0, k)? else {
            return Ok(SolveOutcome { point: x, trace, stop: StopReason::StepUnderflow });
        };
        let (fnext, step) = next;
        let moved = x.dist(&step)?;
        trace.push(Iteration { value: fnext, step: t, moved });
        // t·‖G_t‖ grows and ‖G_t‖ shrinks with t, so this bounds the
        // gradient mapping at step_init from above for any accepted t.
        let stationarity = moved / t.min(tol.step_init);
        t0 = (2.0 * t).min(MAX_STEP_GROWTH * tol.step_init);
        x = step;
        if moved <= STALL_DIST {
            return Ok(SolveOutcome { point: x, trace, stop: StopReason::Stalled });
        }
        if stationarity <= tol.stationarity_tol {
            return Ok(SolveOutcome { point: x, trace, stop: StopReason::Stationary });
        }
    }
    Ok(SolveOutcome { point: x, trace, stop: StopReason::MaxIters })
}

// Returns ((f(x⁺), x⁺), t) or None when the step underflows. Steps that leave
// the projection neighborhood or the objective's domain are halved too.
fn armijo(problem: &ProblemSpec, x: &Point, fx: f64, g: &TangentVector, t0: f64, k: usize) -> Result<Option<((f64, Point), f64)>> {
    let mut t = t0;
    let mut last_err = None;
    while t >= MIN_STEP {
        match trial(problem, g, t, k) {
            Ok((fnext, next)) => {
                let decrease = g.inner(&x.log(&next)?)?;
                if fnext <= fx + ARMIJO_C * decrease {
                    return Ok(Some(((fnext, next), t)));
                }
            }
            Err(e @ Error::NumericalBreakdown { .. }) => return Err(e),
            Err(e) => last_err = Some(e),
        }
        t *= 0.5;
    }
    match last_err {
        Some(e) if !matches!(e, Error::EvalDomain(_) | Error::OutsideProjectionNeighborhood { .. } | Error::BeyondInjectivityRadius { .. }) => Err(e),
        _ => Ok(None),
    }
}

fn trial(problem: &ProblemSpec, g: &TangentVector, t: f64, k: usize) -> Result<(f64, Point)> {
    let y = g.scale(-t).exp()?;
    let next = problem.region.project(&y)?.q_star;
    Ok((problem.value(&next, k)?, next))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    FritzJohn,
    Kkt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KKTCertificate {
    pub point: Point,
    /// One entry per constraint; zero off the active set.
    pub multipliers: Vec<f64>,
    pub lambda0: f64,
    pub stationarity_residual: f64,
    pub complementarity: Vec<f64>,
    pub feasible: bool,
    pub mode: CertificateMode,
    pub active: Vec<usize>,
    pub certified: bool,
}

impl KKTCertificate {
    pub fn max_complementarity(&self) -> f64 {
        self.complementarity.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

struct PointData {
    values: Vec<f64>,
    active: Vec<usize>,
    grad_f: TangentVector,
    feasible: bool,
}

fn point_data(problem: &ProblemSpec, point: &Point) -> Result<PointData> {
    let region = &problem.region;
    let values = region.constraint_values(point)?;
    let active = region.active_set(point)?;
    let grad_f = problem.gradient(point, 0)?;
    let feasible = values.iter().all(|g| *g <= region.interior_tol());
    Ok(PointData { values, active, grad_f, feasible })
}

/// Finds λ ≥ 0 on the active set minimizing ‖grad f + Σ λᵢ grad gᵢ‖.
pub fn check_kkt(problem: &ProblemSpec, point: &Point) -> Result<KKTCertificate> {
    let data = point_data(problem, point)?;
    let scale = NEGLIGIBLE_GRADIENT * data.grad_f.norm().max(1.0);
    let mut used = Vec::new();
    let mut gens = Vec::new();
    for &i in &data.active {
        let g = riemannian_grad(&problem.region.constraints()[i], point)?;
        if g.norm() > scale {
            used.push(i);
            gens.push(g);
        }
    }
    let cone = GeneratedCone::new(point.clone(), gens)?;
    let fit = nonneg_combination(&cone, &data.grad_f.scale(-1.0))?;
    let mut multipliers = vec![0.0; data.values.len()];
    for (&i, &l) in used.iter().zip(&fit.coefficients) {
        multipliers[i] = l;
    }
    let complementarity: Vec<f64> = multipliers.iter().zip(&data.values).map(|(l, g)| l * g).collect();
    let tol = problem.tolerances;
    let mut cert = KKTCertificate {
        point: point.clone(),
        multipliers,
        lambda0: 1.0,
        stationarity_residual: fit.residual,
        complementarity,
        feasible: data.feasible,
        mode: CertificateMode::Kkt,
        active: data.active,
        certified: false,
    };
    cert.certified =
        cert.feasible && cert.stationarity_residual <= tol.stationarity_tol && cert.max_complementarity() <= tol.complementarity_tol;
    Ok(cert)
}

/// Minimizes ‖λ₀ grad f + Σ λᵢ grad gᵢ‖ over the simplex λ₀ + Σ λᵢ = 1.
pub fn check_fritz_john(problem: &ProblemSpec, point: &Point) -> Result<KKTCertificate> {
    let data = point_data(problem, point)?;
    let mut vectors = vec![data.grad_f.clone()];
    for &i in &data.active {
        vectors.push(riemannian_grad(&problem.region.constraints()[i], point)?);
    }
    let m = vectors.len();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = vectors[i].inner(&vectors[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let weights = simplex_min(&gram);
    let mut combo = point.zero_vector();
    for (v, w) in vectors.iter().zip(&weights) {
        combo = combo.add(&v.scale(*w))?;
    }
    let mut multipliers = vec![0.0; data.values.len()];
    for (&i, &w) in data.active.iter().zip(&weights[1..]) {
        multipliers[i] = w;
    }
    let complementarity: Vec<f64> = multipliers.iter().zip(&data.values).map(|(l, g)| l * g).collect();
    let residual = combo.norm();
    Ok(KKTCertificate {
        point: point.clone(),
        multipliers,
        lambda0: weights[0],
        stationarity_residual: residual,
        complementarity,
        feasible: data.feasible,
        mode: CertificateMode::FritzJohn,
        active: data.active,
        certified: data.feasible && residual <= problem.tolerances.stationarity_tol,
    })
}

fn quad(gram: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    w.dot(&(gram * w))
}

// Projected gradient on the simplex followed by an exact solve on the face
// spanned by the final support.
fn simplex_min(gram: &DMatrix<f64>) -> Vec<f64> {
    let m = gram.nrows();
    let lipschitz = 2.0 * gram.clone().symmetric_eigenvalues().max();
    let mut w = DVector::from_element(m, 1.0 / m as f64);
    if lipschitz > 0.0 {
        for _ in 0..SIMPLEX_ITERS {
            let grad = gram * &w * 2.0;
            w = project_simplex(&(&w - grad / lipschitz));
        }
    }
    if let Some(face) = face_polish(gram, &w) {
        if quad(gram, &face) <= quad(gram, &w) {
            w = face;
        }
    }
    w.iter().copied().collect()
}

fn face_polish(gram: &DMatrix<f64>, w: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 1e-12).collect();
    let k = support.len();
    if k == 0 {
        return None;
    }
    // [G_SS 1; 1ᵀ 0] [λ; −ν] = [0; 1]
    let mut a = DMatrix::zeros(k + 1, k + 1);
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[(r, c)] = gram[(i, j)];
        }
        a[(r, k)] = 1.0;
        a[(k, r)] = 1.0;
    }
    let mut b = DVector::zeros(k + 1);
    b[k] = 1.0;
    let eps = 1e-14 * a.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let sol = a.svd(true, true).solve(&b, eps).ok()?;
    if (0..k).any(|r| sol[r] < 0.0 || !sol[r].is_finite()) {
        return None;
    }
    let mut out = DVector::zeros(w.len());
    for (r, &i) in support.iter().enumerate() {
        out[i] = sol[r];
    }
    let total = out.sum();
    (total > 0.0).then(|| out / total)
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, s) in sorted.iter().enumerate() {
        cumsum += s;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqReport {
    pub probes: usize,
    pub inside: usize,
    pub counterexamples: usize,
    pub undecided: usize,
    /// inside / (inside + counterexamples), 1 when nothing was decisive.
    pub fraction: f64,
}

/// Samples the linearization cone {v : ⟨grad gᵢ, v⟩ ≤ 0, i active} and tests
/// each direction against the tangent cone. Advisory: sampling cannot prove CQ.
pub fn check_cq(problem: &ProblemSpec, point: &Point, probes: usize, seed: u64) -> Result<CqReport> {
    let region = &problem.region;
    let max_constraint = region.max_constraint(point)?;
    if region.classify(max_constraint) != Membership::Boundary {
        return Err(Error::NotBoundaryPoint { max_constraint });
    }
    let gens = region
        .active_set(point)?
        .into_iter()
        .map(|i| riemannian_grad(&region.constraints()[i], point))
        .collect::<Result<Vec<_>>>()?;
    let polar = GeneratedCone::new(point.clone(), gens)?;
    let mut rng = rng(seed);
    let mut report = CqReport { probes: 0, inside: 0, counterexamples: 0, undecided: 0, fraction: 1.0 };
    for _ in 0..probes * CQ_DRAW_FACTOR {
        if report.probes == probes {
            break;
        }
        let Some(v) = linearization_sample(&polar, point, &mut rng)? else { continue };
        report.probes += 1;
        let direct = tangent_cone_member(region, &v)?.verdict;
        let seq = tangent_cone_member_seq(region, &v)?.verdict;
        match (direct, seq) {
            (ConeVerdict::InTangentCone, ConeVerdict::InTangentCone) => report.inside += 1,
            (ConeVerdict::NotInTangentCone, ConeVerdict::NotInTangentCone) => report.counterexamples += 1,
            _ => report.undecided += 1,
        }
    }
    let decisive = report.inside + report.counterexamples;
    if decisive > 0 {
        report.fraction = report.inside as f64 / decisive as f64;
    }
    Ok(report)
}

// Moreau decomposition: w minus its projection onto the polar cone lies in
// the linearization cone.
fn linearization_sample(polar: &GeneratedCone, point: &Point, rng: &mut crate::sampling::SeededRng) -> Result<Option<TangentVector>> {
    let w = unit_tangent(point, rng);
    let fit = nonneg_combination(polar, &w)?;
    let v = w.sub(&polar.combination(&fit.coefficients)?)?;
    Ok(v.normalized().filter(|_| v.norm() > 1e-9))
}

/// max over interior samples z of ⟨−grad f(x̄), log_x̄ z⟩, which is ≤ 0 when
/// −grad f lies in the normal cone.
pub fn descent_normality(problem: &ProblemSpec, point: &Point, probes: usize, seed: u64) -> Result<f64> {
    let g = problem.gradient(point, 0)?.scale(-1.0);
    let mut worst = f64::NEG_INFINITY;
    for z in problem.region.sample_interior(probes, seed)? {
        worst = worst.max(g.inner(&point.log(&z)?)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use approx::assert_abs_diff_eq;

    fn r2(x: f64, y: f64) -> Point {
        ManifoldSpec::euclidean(2).point(vec![x, y]).unwrap()
    }

    fn disk_problem(objective: &str) -> ProblemSpec {
        let m = ManifoldSpec::euclidean(2);
        let region = ConvexRegion::from_sources(m, &["x1*x1 + x2*x2 - 1"], m.origin()).unwrap();
        ProblemSpec::new(parse(objective, 2).unwrap(), region, r2(0.3, 0.4)).unwrap()
    }

    fn cap_problem() -> ProblemSpec {
        let m = ManifoldSpec::sphere(2);
        let region = ConvexRegion::from_sources(m, &["gdist(1, 0, 0) - 0.5"], m.origin()).unwrap();
        ProblemSpec::new(parse("gdist(0, 0, 1)^2", 3).unwrap(), region, m.origin()).unwrap()
    }

    // Radial minimizer exp_{e₁}(0.5·e₃) of d(·, e₃)² over the cap.
    fn cap_minimizer() -> Point {
        ManifoldSpec::sphere(2).point(vec![0.5f64.cos(), 0.0, 0.5f64.sin()]).unwrap()
    }

    #[test]
    fn linear_objective_on_disk() {
        let p = disk_problem("x1");
        let out = solve(&p).unwrap();
        assert!(out.point.dist(&r2(-1.0, 0.0)).unwrap() <= 1e-5);
        assert!(!out.trace.is_empty());
        let cert = check_kkt(&p, &r2(-1.0, 0.0)).unwrap();
        assert!(cert.certified);
        assert_abs_diff_eq!(cert.multipliers[0], 0.5, epsilon = 1e-7);
        assert!(cert.stationarity_residual <= 1e-7);
    }

    #[test]
    fn distance_objective_reaches_interior_target() {
        let p = disk_problem("gdist(0.2, -0.3)^2");
        let out = solve(&p).unwrap();
        assert!(out.point.dist(&r2(0.2, -0.3)).unwrap() <= 1e-5);
        let cert = check_kkt(&p, &r2(0.2, -0.3)).unwrap();
        assert!(cert.certified);
        assert_eq!(cert.multipliers, vec![0.0]);
    }

    #[test]
    fn cap_problem_solution_and_multiplier() {
        let p = cap_problem();
        let out = solve(&p).unwrap();
        assert!(out.point.dist(&cap_minimizer()).unwrap() <= 1e-4, "{:?}", out.point);
        let cert = check_kkt(&p, &cap_minimizer()).unwrap();
        assert!(cert.certified);
        // radial stationarity: 2(π/2 − 0.5) = λ
        assert_abs_diff_eq!(cert.multipliers[0], std::f64::consts::PI - 1.0, epsilon = 1e-5);
    }

    #[test]
    fn fritz_john_rescales_kkt() {
        let p = disk_problem("x1");
        let fj = check_fritz_john(&p, &r2(-1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(fj.lambda0, 1.0 / 1.5, epsilon = 1e-8);
        assert_abs_diff_eq!(fj.multipliers[0], 0.5 / 1.5, epsilon = 1e-8);
        assert!(fj.stationarity_residual <= 1e-9);
        assert!(fj.certified);
        let free = disk_problem("gdist(0.2, -0.3)^2");
        let fj = check_fritz_john(&free, &r2(0.2, -0.3)).unwrap();
        assert_abs_diff_eq!(fj.lambda0, 1.0);
        assert!(fj.stationarity_residual <= 1e-9);
    }

    #[test]
    fn fritz_john_without_constraint_qualification() {
        let m = ManifoldSpec::euclidean(2);
        // {x₁ ≤ 1} described by a constraint that is flat on its boundary
        let region = ConvexRegion::builder(m)
            .parse_constraint("(x1 - 1)^3")
            .unwrap()
            .anchor(m.origin())
            .skip_convexity_check()
            .build()
            .unwrap();
        let p = ProblemSpec::new(parse("-x1", 2).unwrap(), region, m.origin()).unwrap();
        let fj = check_fritz_john(&p, &r2(1.0, 0.0)).unwrap();
        assert!(fj.lambda0 <= 1e-6, "{fj:?}");
        assert_abs_diff_eq!(fj.multipliers[0], 1.0, epsilon = 1e-6);
        assert!(fj.stationarity_residual <= 1e-9);
        let kkt = check_kkt(&p, &r2(1.0, 0.0)).unwrap();
        assert!(!kkt.certified);
    }

    #[test]
    fn cq_on_disk_and_cusp() {
        let p = disk_problem("x1");
        let rep = check_cq(&p, &r2(1.0, 0.0), 200, 0).unwrap();
        assert_eq!(rep.probes, 200);
        assert_eq!(rep.fraction, 1.0);
        assert_eq!(rep.counterexamples, 0);

        let m = ManifoldSpec::euclidean(2);
        let cusp = ConvexRegion::builder(m)
            .parse_constraint("x2 - x1^3")
            .unwrap()
            .parse_constraint("-x2 - x1^3")
            .unwrap()
            .anchor(r2(0.5, 0.0))
            .skip_convexity_check()
            .build()
            .unwrap();
        let p = ProblemSpec::new(parse("x1", 2).unwrap(), cusp, r2(0.5, 0.0)).unwrap();
        let rep = check_cq(&p, &r2(0.0, 0.0), 50, 0).unwrap();
        assert!(rep.counterexamples > 0, "{rep:?}");
    }

    #[test]
    fn simplex_projection() {
        let w = project_simplex(&DVector::from_vec(vec![0.5, 2.0, -1.0]));
        assert_abs_diff_eq!(w.sum(), 1.0, epsilon = 1e-15);
        assert_eq!(w[2], 0.0);
    }

    #[test]
    fn normal_cone_contains_descent_direction() {
        let p = cap_problem();
        assert!(descent_normality(&p, &cap_minimizer(), 200, 0).unwrap() <= 1e-5);
    }
}
