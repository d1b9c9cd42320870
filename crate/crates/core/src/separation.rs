//! Quasi-hyperplanes: separating an exterior point from a region and
//! supporting a region at a boundary point.

use serde::Serialize;

use crate::cone::{tangent_cone_member, ConeVerdict};
use crate::error::{Error, Result};
use crate::expr::riemannian_grad;
use crate::manifold::{Point, TangentVector};
use crate::region::{ConvexRegion, Membership};
use crate::sampling::{derive_seed, rng, unit_tangent};

pub const DEFAULT_PROBES: usize = 500;
pub const DEFAULT_SUPPORT_STEPS: usize = 40;
/// Relative slack of the separation certificate.
pub const SEPARATION_TOL: f64 = 1e-8;
pub const SUPPORT_TOL: f64 = 1e-6;
pub const LINEARIZATION_TOL: f64 = 1e-6;

const CAUCHY_TOL: f64 = 1e-7;
const BASE_TOL: f64 = 1e-6;
const OUTWARD_DRAWS: usize = 1000;
const SUPPORT_STREAM: u64 = 0x5u64 << 32;
const LINEARIZE_DRAW_FACTOR: usize = 20;

/// H(p, q, α) = {a : ⟨u, log_p a⟩ = α} with u = log_p q.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiHyperplane {
    base: Point,
    direction: TangentVector,
    offset: f64,
}

impl QuasiHyperplane {
    pub fn new(direction: TangentVector, offset: f64) -> Result<Self> {
        if direction.is_zero() {
            return Err(Error::DegenerateDirection);
        }
        Ok(QuasiHyperplane { base: direction.base().clone(), direction, offset })
    }

    /// The plane H(p, q, α).
    pub fn through(p: &Point, q: &Point, offset: f64) -> Result<Self> {
        Self::new(p.log(q)?, offset)
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn direction(&self) -> &TangentVector {
        &self.direction
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn unit_normal(&self) -> TangentVector {
        self.direction.normalized().expect("direction is nonzero by construction")
    }

    /// ⟨u, log_p a⟩ − α.
    pub fn evaluate(&self, a: &Point) -> Result<f64> {
        Ok(self.direction.inner(&self.base.log(a)?)? - self.offset)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCertificate {
    pub plane: QuasiHyperplane,
    pub point_value: f64,
    pub set_sup: f64,
    pub probes_used: usize,
    pub margin: f64,
    pub certified: bool,
}

/// Separates an exterior point y from the region through H(Pr(y), y, 0).
pub fn separate(region: &ConvexRegion, y: &Point, probes: usize, seed: u64) -> Result<SeparationCertificate> {
    if region.member(y)? != Membership::Exterior {
        return Err(Error::PointInSet);
    }
    let p = region.project(y)?.q_star;
    let plane = QuasiHyperplane::through(&p, y, 0.0)?;
    let u = plane.direction();
    let set_sup = set_sup(region, &plane, probes, seed)?;
    let point_value = u.inner(&p.log(y)?)?;
    Ok(SeparationCertificate {
        certified: set_sup <= SEPARATION_TOL * u.norm() && point_value > 0.0,
        margin: point_value - set_sup.max(0.0),
        plane,
        point_value,
        set_sup,
        probes_used: probes,
    })
}

// max over interior samples z of ⟨u, log_p z⟩ − α.
fn set_sup(region: &ConvexRegion, plane: &QuasiHyperplane, probes: usize, seed: u64) -> Result<f64> {
    let mut sup = f64::NEG_INFINITY;
    for z in region.sample_interior(probes, seed)? {
        sup = sup.max(plane.evaluate(&z)?);
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportingPlane {
    /// H(p, y*, 0) with y* the witness below.
    pub plane: QuasiHyperplane,
    pub witness: Point,
    pub steps: usize,
    pub converged: bool,
    /// max over interior probes z of ⟨û, log_p z⟩ with û the unit normal.
    pub sup: f64,
}

/// Supporting quasi-hyperplane at a boundary point, obtained as the limit
/// of separating planes of exterior points yᵏ → p.
pub fn supporting_plane(region: &ConvexRegion, p: &Point, max_steps: usize, seed: u64) -> Result<SupportingPlane> {
    let max_constraint = region.max_constraint(p)?;
    if region.classify(max_constraint) != Membership::Boundary {
        return Err(Error::NotBoundaryPoint { max_constraint });
    }
    let eps = region.epsilon(p)?;
    let delta0 = 0.1 * eps;
    let mut rng = rng(derive_seed(seed, SUPPORT_STREAM));
    let mut outward = active_gradient_direction(region, p)?;

    let mut prev: Option<(Point, Vec<f64>)> = None;
    let mut last: Option<Vec<f64>> = None;
    let mut steps = 0;
    let mut converged = false;
    for k in 0..max_steps {
        steps = k + 1;
        let delta = delta0 * 0.5f64.powi(k as i32);
        let Some((y, dir)) = exterior_probe(region, p, 0.5 * delta, outward.as_ref(), &mut rng)? else { continue };
        outward = Some(dir);
        let pk = region.project(&y)?.q_star;
        let Some(uk) = pk.log(&y)?.normalized() else { continue };
        let uk = uk.coords().to_vec();
        if let Some((prev_base, prev_u)) = &prev {
            let near = pk.dist(p)? <= BASE_TOL && prev_base.dist(p)? <= BASE_TOL;
            let change = uk.iter().zip(prev_u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if near && change <= CAUCHY_TOL {
                converged = true;
                last = Some(uk);
                break;
            }
        }
        prev = Some((pk, uk.clone()));
        last = Some(uk);
    }

    let Some(u) = last.and_then(|c| p.project_tangent(&c).ok()).and_then(|u| u.normalized()) else {
        return Err(Error::SupportNotCertified { steps, sup: f64::NAN, converged });
    };
    let witness = u.scale(0.5 * eps).exp()?;
    let plane = QuasiHyperplane::through(p, &witness, 0.0)?;
    let unit = QuasiHyperplane::new(u, 0.0)?;
    let sup = set_sup(region, &unit, DEFAULT_PROBES, seed)?;
    if sup > SUPPORT_TOL {
        return Err(Error::SupportNotCertified { steps, sup, converged });
    }
    Ok(SupportingPlane { plane, witness, steps, converged, sup })
}

fn active_gradient_direction(region: &ConvexRegion, p: &Point) -> Result<Option<TangentVector>> {
    let mut sum = p.zero_vector();
    for i in region.active_set(p)? {
        sum = sum.add(&riemannian_grad(&region.constraints()[i], p)?)?;
    }
    Ok(sum.normalized())
}

// Exterior point at distance `step` from p: along the preferred direction if
// that works, otherwise along seeded random directions.
fn exterior_probe(
    region: &ConvexRegion,
    p: &Point,
    step: f64,
    preferred: Option<&TangentVector>,
    rng: &mut crate::sampling::SeededRng,
) -> Result<Option<(Point, TangentVector)>> {
    let is_exterior = |x: &Point| matches!(region.member(x), Ok(Membership::Exterior));
    if let Some(dir) = preferred {
        let y = dir.scale(step).exp()?;
        if is_exterior(&y) {
            return Ok(Some((y, dir.clone())));
        }
    }
    for _ in 0..OUTWARD_DRAWS {
        let dir = unit_tangent(p, rng);
        let y = dir.scale(step).exp()?;
        if is_exterior(&y) {
            return Ok(Some((y, dir)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationReport {
    /// Sampled unit directions found in the tangent cone.
    pub cone_samples: usize,
    /// Largest ⟨u, v⟩/‖u‖ over those directions.
    pub max_cone_value: f64,
    /// ⟨u, log_p y⟩ for the separated point y = exp_p(u).
    pub point_value: f64,
    pub holds: bool,
}

/// Checks in T_pM that v ↦ ⟨u, v⟩ separates u from the tangent cone at p.
pub fn linearize(plane: &QuasiHyperplane, region: &ConvexRegion, probes: usize, seed: u64) -> Result<LinearizationReport> {
    let p = plane.base();
    let u = plane.direction();
    let un = u.norm();
    let mut rng = rng(seed);
    let mut cone_samples = 0;
    let mut max_cone_value = f64::NEG_INFINITY;
    for _ in 0..probes * LINEARIZE_DRAW_FACTOR {
        if cone_samples == probes {
            break;
        }
        let v = unit_tangent(p, &mut rng);
        if tangent_cone_member(region, &v)?.verdict == ConeVerdict::InTangentCone {
            cone_samples += 1;
            max_cone_value = max_cone_value.max(u.inner(&v)? / un);
        }
    }
    let point_value = u.inner(u)?;
    Ok(LinearizationReport {
        cone_samples,
        max_cone_value,
        point_value,
        holds: cone_samples > 0 && max_cone_value <= LINEARIZATION_TOL && point_value > 0.0,
    })
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

    fn w() -> TangentVector {
        ManifoldSpec::sphere(2).origin().tangent(vec![0.0, 0.6, 0.8]).unwrap()
    }

    fn r2(x: f64, y: f64) -> Point {
        ManifoldSpec::euclidean(2).point(vec![x, y]).unwrap()
    }

    fn assert_coords(v: &[f64], expect: &[f64], tol: f64) {
        for (a, e) in v.iter().zip(expect) {
            assert_abs_diff_eq!(a, e, epsilon = tol);
        }
    }

    #[test]
    fn disk_separation() {
        let cert = separate(&disk(), &r2(2.0, 0.0), 500, 0).unwrap();
        assert_coords(cert.plane.base().coords(), &[1.0, 0.0], 1e-9);
        assert_coords(cert.plane.direction().coords(), &[1.0, 0.0], 1e-9);
        assert!(cert.set_sup <= 0.0);
        assert_abs_diff_eq!(cert.point_value, 1.0, epsilon = 1e-9);
        assert!(cert.certified && cert.margin > 0.0);
    }

    #[test]
    fn cap_separation() {
        let y = w().scale(1.0).exp().unwrap();
        let cert = separate(&cap(), &y, 500, 0).unwrap();
        let p = w().scale(0.5).exp().unwrap();
        assert_coords(cert.plane.base().coords(), p.coords(), 1e-8);
        assert_abs_diff_eq!(cert.point_value, 0.25, epsilon = 1e-8);
        assert_abs_diff_eq!(cert.point_value, cert.plane.direction().norm().powi(2), epsilon = 1e-9);
        assert!(cert.set_sup <= 1e-8);
        assert!(cert.certified);
    }

    #[test]
    fn interior_point_is_rejected() {
        assert!(matches!(separate(&disk(), &r2(0.2, 0.1), 10, 0), Err(Error::PointInSet)));
    }

    #[test]
    fn zero_direction_is_rejected() {
        let p = r2(1.0, 0.0);
        assert!(matches!(QuasiHyperplane::new(p.zero_vector(), 0.0), Err(Error::DegenerateDirection)));
        assert!(matches!(QuasiHyperplane::through(&p, &p, 0.0), Err(Error::DegenerateDirection)));
    }

    #[test]
    fn half_plane_support() {
        let m = ManifoldSpec::euclidean(2);
        let region = ConvexRegion::from_sources(m, &["x1"], r2(-1.0, 0.0)).unwrap();
        let s = supporting_plane(&region, &r2(0.0, 0.0), DEFAULT_SUPPORT_STEPS, 0).unwrap();
        assert!(s.converged);
        assert_coords(s.plane.unit_normal().coords(), &[1.0, 0.0], 1e-7);
        assert_abs_diff_eq!(s.plane.evaluate(&r2(0.0, 0.0)).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn disk_support() {
        let s = supporting_plane(&disk(), &r2(1.0, 0.0), DEFAULT_SUPPORT_STEPS, 0).unwrap();
        assert_coords(s.plane.unit_normal().coords(), &[1.0, 0.0], 1e-7);
        assert!(s.sup <= SUPPORT_TOL);
    }

    #[test]
    fn cap_support_is_outward_radial() {
        let c = cap();
        let b = w().scale(0.5).exp().unwrap();
        let s = supporting_plane(&c, &b, DEFAULT_SUPPORT_STEPS, 3).unwrap();
        let radial = b.log(c.anchor()).unwrap().scale(-1.0).normalized().unwrap();
        assert_coords(s.plane.unit_normal().coords(), radial.coords(), 1e-6);
        assert_abs_diff_eq!(s.plane.unit_normal().norm(), 1.0, epsilon = 1e-12);
        assert!(s.sup <= SUPPORT_TOL);
    }

    #[test]
    fn support_needs_boundary_point() {
        assert!(matches!(
            supporting_plane(&disk(), &r2(0.0, 0.0), 5, 0),
            Err(Error::NotBoundaryPoint { .. })
        ));
    }

    #[test]
    fn linearization_examples() {
        let cert = separate(&disk(), &r2(2.0, 0.0), 100, 0).unwrap();
        let rep = linearize(&cert.plane, &disk(), 200, 0).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert_eq!(rep.cone_samples, 200);
        let y = w().scale(1.0).exp().unwrap();
        let cert = separate(&cap(), &y, 100, 0).unwrap();
        let rep = linearize(&cert.plane, &cap(), 200, 0).unwrap();
        assert!(rep.holds, "{rep:?}");
    }
}
