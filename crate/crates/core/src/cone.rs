//! Tangent, normal and polar cones of a region at a member point.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::riemannian_grad;
use crate::manifold::{Point, TangentVector};
use crate::nnls::nnls_gram;
use crate::region::{ConvexRegion, Membership};
use crate::sampling::{rng, unit_tangent};

/// Number of halvings of ε(p) tried by the membership tests.
pub const CONE_HALVINGS: i32 = 40;
/// Sequence residual below which a direction is accepted.
pub const SEQ_ACCEPT: f64 = 1e-12;
/// Sequence residual that every probe must exceed for a rejection.
pub const SEQ_REJECT: f64 = 1e-3;
/// Tolerance used when comparing cone probes with polar cones.
pub const POLAR_TOL: f64 = 1e-6;

const SHRINK_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeVerdict {
    InTangentCone,
    NotInTangentCone,
    Undecided,
}

impl fmt::Display for ConeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConeVerdict::InTangentCone => "in_tangent_cone",
            ConeVerdict::NotInTangentCone => "not_in_tangent_cone",
            ConeVerdict::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeProbe {
    pub base: Point,
    /// Unit direction (the zero vector when the probe was the zero vector).
    pub direction: TangentVector,
    pub verdict: ConeVerdict,
    pub witness_t: Option<f64>,
}

impl ConeProbe {
    pub fn is_decisive(&self) -> bool {
        self.verdict != ConeVerdict::Undecided
    }
}

/// The cone {Σ λᵢ gᵢ : λᵢ ≥ 0} at a common base point.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCone {
    base: Point,
    generators: Vec<TangentVector>,
}

impl GeneratedCone {
    pub fn new(base: Point, generators: Vec<TangentVector>) -> Result<Self> {
        if generators.iter().any(|g| !g.base().same_as(&base)) {
            return Err(Error::BasePointMismatch);
        }
        Ok(GeneratedCone { base, generators })
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn generators(&self) -> &[TangentVector] {
        &self.generators
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    /// Σ λᵢ gᵢ.
    pub fn combination(&self, lambda: &[f64]) -> Result<TangentVector> {
        let mut acc = self.base.zero_vector();
        for (g, l) in self.generators.iter().zip(lambda) {
            acc = acc.add(&g.scale(*l))?;
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeInclusionReport {
    pub samples: usize,
    /// Largest ⟨v, gᵢ⟩/(‖v‖‖gᵢ‖) over samples v and polar generators gᵢ.
    pub max_violation: f64,
    #[serde(skip)]
    pub counterexample: Option<TangentVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsCombination {
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

pub fn epsilon_of(region: &ConvexRegion, p: &Point) -> Result<f64> {
    region.epsilon(p)
}

fn check_base(region: &ConvexRegion, v: &TangentVector) -> Result<(Point, f64)> {
    let p = v.base().clone();
    let eps = region.epsilon(&p)?;
    Ok((p, eps))
}

/// Direct test of the cone definition: does exp_p(t·v̂) enter the interior
/// for some t = ε(p)·2⁻ʲ?
pub fn tangent_cone_member(region: &ConvexRegion, v: &TangentVector) -> Result<ConeProbe> {
    let (p, eps) = check_base(region, v)?;
    let Some(dir) = v.normalized() else {
        return Ok(ConeProbe { base: p, direction: v.clone(), verdict: ConeVerdict::InTangentCone, witness_t: None });
    };
    let mut saw_exterior = false;
    for j in 0..=CONE_HALVINGS {
        let t = eps * 2f64.powi(-j);
        let x = dir.scale(t).exp()?;
        match region.member(&x) {
            Ok(Membership::Interior) => {
                return Ok(ConeProbe { base: p, direction: dir, verdict: ConeVerdict::InTangentCone, witness_t: Some(t) })
            }
            Ok(Membership::Boundary) => {}
            Ok(Membership::Exterior) | Err(_) => saw_exterior = true,
        }
    }
    // A probe that never enters the interior but leaves the band somewhere is
    // rejected; only an all-band probe stays open.
    let verdict = if saw_exterior { ConeVerdict::NotInTangentCone } else { ConeVerdict::Undecided };
    Ok(ConeProbe { base: p, direction: dir, verdict, witness_t: None })
}

/// Sequence test: xᵏ = exp_p(tₖ v̂) pulled back toward the anchor until
/// interior, then checks whether some αₖ·log_p xᵏ reproduces v̂.
pub fn tangent_cone_member_seq(region: &ConvexRegion, v: &TangentVector) -> Result<ConeProbe> {
    let (p, eps) = check_base(region, v)?;
    let Some(dir) = v.normalized() else {
        return Ok(ConeProbe { base: p, direction: v.clone(), verdict: ConeVerdict::InTangentCone, witness_t: None });
    };
    let mut best = f64::INFINITY;
    for k in 0..=CONE_HALVINGS {
        let t = eps * 2f64.powi(-k);
        let x = dir.scale(t).exp()?;
        let Some(x) = pull_into_interior(region, x)? else { continue };
        let w = p.log(&x)?;
        let wn2 = w.inner(&w)?;
        if wn2 == 0.0 {
            continue;
        }
        let alpha = (w.inner(&dir)? / wn2).max(0.0);
        let r = w.scale(alpha).sub(&dir)?.norm();
        if r <= SEQ_ACCEPT {
            return Ok(ConeProbe { base: p, direction: dir, verdict: ConeVerdict::InTangentCone, witness_t: Some(t) });
        }
        best = best.min(r);
    }
    let verdict = if best >= SEQ_REJECT { ConeVerdict::NotInTangentCone } else { ConeVerdict::Undecided };
    Ok(ConeProbe { base: p, direction: dir, verdict, witness_t: None })
}

// First interior point on the geodesic from x to the anchor, by bisection.
fn pull_into_interior(region: &ConvexRegion, x: Point) -> Result<Option<Point>> {
    if region.is_interior(&x) {
        return Ok(Some(x));
    }
    let to_anchor = x.log(region.anchor())?;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..SHRINK_STEPS {
        let mid = 0.5 * (lo + hi);
        if region.is_interior(&to_anchor.scale(mid).exp()?) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let y = to_anchor.scale(hi).exp()?;
    Ok(region.is_interior(&y).then_some(y))
}

/// Gradients of the active constraints at p; empty in the interior.
pub fn normal_cone_generators(region: &ConvexRegion, p: &Point) -> Result<GeneratedCone> {
    match region.member(p)? {
        Membership::Exterior => Err(Error::NotInSet),
        Membership::Interior => GeneratedCone::new(p.clone(), Vec::new()),
        Membership::Boundary => {
            let gens = region
                .active_set(p)?
                .into_iter()
                .map(|i| riemannian_grad(&region.constraints()[i], p))
                .collect::<Result<Vec<_>>>()?;
            GeneratedCone::new(p.clone(), gens)
        }
    }
}

/// Largest normalized ⟨u, gᵢ⟩; −1 when there is nothing to violate.
pub fn polar_violation(cone: &GeneratedCone, u: &TangentVector) -> Result<f64> {
    if !u.base().same_as(&cone.base) {
        return Err(Error::BasePointMismatch);
    }
    let un = u.norm();
    let mut worst = -1.0_f64;
    if un == 0.0 {
        return Ok(worst);
    }
    for g in &cone.generators {
        let gn = g.norm();
        if gn > 0.0 {
            worst = worst.max(u.inner(g)? / (un * gn));
        }
    }
    Ok(worst)
}

pub fn polar_member(cone: &GeneratedCone, u: &TangentVector, tol: f64) -> Result<bool> {
    Ok(polar_violation(cone, u)? <= tol)
}

/// Samples the generators of `cone_a` and random nonnegative combinations of
/// them, measuring how far each leaves the polar of `polar_of`.
pub fn cone_in_cone(cone_a: &GeneratedCone, polar_of: &GeneratedCone, samples: usize, seed: u64) -> Result<ConeInclusionReport> {
    use rand::Rng;
    if !cone_a.base.same_as(&polar_of.base) {
        return Err(Error::BasePointMismatch);
    }
    let mut rng = rng(seed);
    let mut report = ConeInclusionReport { samples: 0, max_violation: -1.0, counterexample: None };
    let n = cone_a.generators.len();
    if n == 0 {
        report.samples = 1;
        return Ok(report);
    }
    for k in 0..samples.max(n) {
        let v = if k < n {
            cone_a.generators[k].clone()
        } else {
            let lambda: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            cone_a.combination(&lambda)?
        };
        report.samples += 1;
        let viol = polar_violation(polar_of, &v)?;
        if viol > report.max_violation {
            report.max_violation = viol;
            report.counterexample = (viol > 0.0).then(|| v.clone());
        }
    }
    Ok(report)
}

/// min over λ ≥ 0 of ‖Σ λᵢ gᵢ − target‖ in the metric at the base point.
pub fn nonneg_combination(cone: &GeneratedCone, target: &TangentVector) -> Result<NnlsCombination> {
    if !target.base().same_as(&cone.base) {
        return Err(Error::BasePointMismatch);
    }
    let gens = &cone.generators;
    let n = gens.len();
    let mut gram = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = gens[i].inner(&gens[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        rhs[i] = gens[i].inner(target)?;
    }
    let out = nnls_gram(&gram, &rhs);
    let residual = cone.combination(&out.coefficients)?.sub(target)?.norm();
    if !out.converged {
        return Err(Error::NNLSStalled { coefficients: out.coefficients, residual });
    }
    Ok(NnlsCombination { coefficients: out.coefficients, residual })
}

/// Aggregated comparison of sampled tangent-cone probes with the polar of the
/// normal-cone generators at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub probes: usize,
    pub generators: usize,
    pub in_cone: usize,
    pub not_in_cone: usize,
    /// Probes where the direct and sequence tests were not both decisive and in agreement.
    pub undecided: usize,
    /// Decisive probes whose verdict contradicts polar membership.
    pub polar_mismatches: usize,
    /// Decisive probes on which the two membership tests disagreed.
    pub test_disagreements: usize,
    /// Largest ⟨grad gᵢ, v⟩ over in-cone unit probes and active i.
    pub max_linearization: f64,
}

pub fn probe_duality(region: &ConvexRegion, p: &Point, probes: usize, seed: u64) -> Result<DualityReport> {
    let normal = normal_cone_generators(region, p)?;
    let mut rng = rng(seed);
    let mut report = DualityReport {
        probes,
        generators: normal.generators.len(),
        in_cone: 0,
        not_in_cone: 0,
        undecided: 0,
        polar_mismatches: 0,
        test_disagreements: 0,
        max_linearization: f64::NEG_INFINITY,
    };
    for _ in 0..probes {
        let v = unit_tangent(p, &mut rng);
        let direct = tangent_cone_member(region, &v)?;
        let seq = tangent_cone_member_seq(region, &v)?;
        if direct.is_decisive() && seq.is_decisive() && direct.verdict != seq.verdict {
            report.test_disagreements += 1;
        }
        if !direct.is_decisive() || direct.verdict != seq.verdict {
            report.undecided += 1;
            continue;
        }
        let in_polar = polar_member(&normal, &v, POLAR_TOL)?;
        match direct.verdict {
            ConeVerdict::InTangentCone => {
                report.in_cone += 1;
                if !in_polar {
                    report.polar_mismatches += 1;
                }
                for g in &normal.generators {
                    report.max_linearization = report.max_linearization.max(g.inner(&v)?);
                }
            }
            ConeVerdict::NotInTangentCone => {
                report.not_in_cone += 1;
                if in_polar {
                    report.polar_mismatches += 1;
                }
            }
            ConeVerdict::Undecided => unreachable!(),
        }
    }
    if report.max_linearization == f64::NEG_INFINITY {
        report.max_linearization = 0.0;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldSpec;
    use approx::assert_abs_diff_eq;

    fn disk() -> ConvexRegion {
        let m = ManifoldSpec::euclidean(2);
        ConvexRegion::from_sources(m, &["x1*x1 + x2*x2 - 1"], m.origin()).unwrap()
    }

    fn cap() -> ConvexRegion {
        let m = ManifoldSpec::sphere(2);
        ConvexRegion::from_sources(m, &["gdist(1, 0, 0) - 0.5"], m.origin()).unwrap()
    }

    fn cap_boundary() -> Point {
        let m = ManifoldSpec::sphere(2);
        m.origin().tangent(vec![0.0, 0.6, 0.8]).unwrap().scale(0.5).exp().unwrap()
    }

    fn r2(x: f64, y: f64) -> Point {
        ManifoldSpec::euclidean(2).point(vec![x, y]).unwrap()
    }

    #[test]
    fn epsilon_examples() {
        let d = disk();
        assert_abs_diff_eq!(epsilon_of(&d, &r2(0.0, 0.0)).unwrap(), 0.1);
        assert!(epsilon_of(&cap(), &cap_boundary()).unwrap() <= std::f64::consts::FRAC_PI_4);
        assert!(matches!(epsilon_of(&d, &r2(2.0, 0.0)), Err(Error::NotInSet)));
    }

    #[test]
    fn disk_boundary_probes() {
        let d = disk();
        let p = r2(1.0, 0.0);
        for test in [tangent_cone_member, tangent_cone_member_seq] {
            let inward = test(&d, &p.tangent(vec![-1.0, 0.0]).unwrap()).unwrap();
            assert_eq!(inward.verdict, ConeVerdict::InTangentCone);
            let t = inward.witness_t.unwrap();
            assert!(t > 0.0 && t <= epsilon_of(&d, &p).unwrap());
            let outward = test(&d, &p.tangent(vec![1.0, 0.0]).unwrap()).unwrap();
            assert_eq!(outward.verdict, ConeVerdict::NotInTangentCone);
            let zero = test(&d, &p.zero_vector()).unwrap();
            assert_eq!(zero.verdict, ConeVerdict::InTangentCone);
            assert_eq!(zero.witness_t, None);
        }
    }

    #[test]
    fn interior_point_sees_everything() {
        let d = disk();
        let p = r2(0.3, -0.2);
        let mut r = rng(5);
        for _ in 0..20 {
            let v = unit_tangent(&p, &mut r);
            assert_eq!(tangent_cone_member(&d, &v).unwrap().verdict, ConeVerdict::InTangentCone);
            assert_eq!(tangent_cone_member_seq(&d, &v).unwrap().verdict, ConeVerdict::InTangentCone);
        }
        assert!(normal_cone_generators(&d, &p).unwrap().is_trivial());
    }

    #[test]
    fn cap_radial_probes() {
        let c = cap();
        let b = cap_boundary();
        let inward = b.log(&c.anchor().clone()).unwrap();
        let outward = inward.scale(-1.0);
        for test in [tangent_cone_member, tangent_cone_member_seq] {
            assert_eq!(test(&c, &inward).unwrap().verdict, ConeVerdict::InTangentCone);
            assert_eq!(test(&c, &outward).unwrap().verdict, ConeVerdict::NotInTangentCone);
        }
        // the gradient of d(·, e₁) is the unit outward radial direction
        let gens = normal_cone_generators(&c, &b).unwrap();
        assert_eq!(gens.generators().len(), 1);
        let g = &gens.generators()[0];
        let expect = outward.normalized().unwrap();
        for (a, e) in g.coords().iter().zip(expect.coords()) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-6);
        }
    }

    #[test]
    fn disk_normal_generator() {
        let d = disk();
        let p = r2(1.0, 0.0);
        let gens = normal_cone_generators(&d, &p).unwrap();
        assert_eq!(gens.generators().len(), 1);
        assert_abs_diff_eq!(gens.generators()[0].coords()[0], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(gens.generators()[0].coords()[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn polar_examples() {
        let p = r2(0.0, 0.0);
        let cone = GeneratedCone::new(p.clone(), vec![p.tangent(vec![1.0, 0.0]).unwrap()]).unwrap();
        assert!(polar_member(&cone, &p.zero_vector(), 1e-9).unwrap());
        assert!(polar_member(&cone, &p.tangent(vec![-1.0, 5.0]).unwrap(), 1e-9).unwrap());
        assert!(!polar_member(&cone, &p.tangent(vec![1.0, 0.0]).unwrap(), 1e-9).unwrap());
        let empty = GeneratedCone::new(p.clone(), Vec::new()).unwrap();
        assert!(polar_member(&empty, &p.tangent(vec![3.0, -7.0]).unwrap(), 0.0).unwrap());
        let other = r2(1.0, 0.0);
        assert!(matches!(GeneratedCone::new(p, vec![other.zero_vector()]), Err(Error::BasePointMismatch)));
    }

    #[test]
    fn half_space_double_polar() {
        // T of {x₁ ≤ 0} at the origin is generated by (−1,0), (0,±1); its polar is generated by (1,0)
        let p = r2(0.0, 0.0);
        let t = |c: Vec<f64>| p.tangent(c).unwrap();
        let tangent = GeneratedCone::new(p.clone(), vec![t(vec![-1.0, 0.0]), t(vec![0.0, 1.0]), t(vec![0.0, -1.0])]).unwrap();
        let normal = GeneratedCone::new(p.clone(), vec![t(vec![1.0, 0.0])]).unwrap();
        let report = cone_in_cone(&tangent, &normal, 200, 0).unwrap();
        assert_eq!(report.samples, 200);
        assert!(report.max_violation <= 1e-12);
        assert!(report.counterexample.is_none());
        let bad = cone_in_cone(&normal, &normal, 10, 0).unwrap();
        assert_abs_diff_eq!(bad.max_violation, 1.0);
        assert!(bad.counterexample.is_some());
    }

    #[test]
    fn nnls_examples() {
        let p = r2(0.0, 0.0);
        let t = |c: Vec<f64>| p.tangent(c).unwrap();
        let single = GeneratedCone::new(p.clone(), vec![t(vec![0.3, -0.4])]).unwrap();
        let fit = nonneg_combination(&single, &t(vec![0.3, -0.4])).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.residual, 0.0, epsilon = 1e-14);
        let ortho = nonneg_combination(&single, &t(vec![4.0, 3.0])).unwrap();
        assert_eq!(ortho.coefficients, vec![0.0]);
        assert_abs_diff_eq!(ortho.residual, 5.0, epsilon = 1e-14);
        let axes = GeneratedCone::new(p.clone(), vec![t(vec![1.0, 0.0]), t(vec![0.0, 1.0])]).unwrap();
        let fit = nonneg_combination(&axes, &t(vec![2.0, 3.0])).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.coefficients[1], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.residual, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn duality_on_disk_boundary() {
        let report = probe_duality(&disk(), &r2(1.0, 0.0), 100, 1).unwrap();
        assert_eq!(report.polar_mismatches, 0);
        assert_eq!(report.test_disagreements, 0);
        assert!(report.in_cone > 20 && report.not_in_cone > 20);
        assert!(report.max_linearization <= 1e-6);
    }
}
