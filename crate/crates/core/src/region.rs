//! Regions C = {x : gᵢ(x) ≤ 0} and certified metric projection onto them.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse, riemannian_grad, Expr};
use crate::manifold::{convexity_radius_bound, ManifoldSpec, Point, TangentVector};
use crate::sampling::{derive_seed, rng, tangent_in_ball};

pub const DEFAULT_INTERIOR_TOL: f64 = 1e-9;
/// Tolerance of the variational-inequality certificate.
pub const VI_TOL: f64 = 1e-6;
/// Number of interior probes used by the projection certificate.
pub const VI_PROBES: usize = 64;
pub const MAX_PROJECTION_ITERS: usize = 10_000;

const GRAD_TOL: f64 = 1e-9;
const ARMIJO_C: f64 = 1e-4;
const RHO_INIT: f64 = 10.0;
// Feasibility target of the multiplier loop, well inside the boundary band.
const FEAS_TOL: f64 = 1e-10;
const MAX_STEP_LENGTH: f64 = 0.5;
const CONVEXITY_CHORDS: usize = 50;
const CONVEXITY_SLACK: f64 = 1e-7;
const CONVEXITY_STREAM: u64 = 0xC0_4E;
const SHRINK_STEPS: usize = 50;
const MAX_DRAWS: usize = 10_000;
const BISECTION_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Membership::Interior => "interior",
            Membership::Boundary => "boundary",
            Membership::Exterior => "exterior",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub q_star: Point,
    pub distance: f64,
    /// Largest normalized ⟨log_{q*} q, log_{q*} z⟩ over the interior probes.
    pub vi_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A sublevel set of declared geodesic convex functions with a strictly
/// feasible anchor point.
#[derive(Debug, Clone)]
pub struct ConvexRegion {
    manifold: ManifoldSpec,
    constraints: Vec<Expr>,
    interior_tol: f64,
    anchor: Point,
}

pub struct RegionBuilder {
    manifold: ManifoldSpec,
    constraints: Vec<Expr>,
    anchor: Option<Point>,
    interior_tol: f64,
    check_convexity: bool,
}

impl RegionBuilder {
    pub fn new(manifold: ManifoldSpec) -> Self {
        RegionBuilder {
            manifold,
            constraints: Vec::new(),
            anchor: None,
            interior_tol: DEFAULT_INTERIOR_TOL,
            check_convexity: true,
        }
    }

    pub fn constraint(mut self, g: Expr) -> Self {
        self.constraints.push(g);
        self
    }

    pub fn parse_constraint(self, source: &str) -> Result<Self> {
        let g = parse(source, self.manifold.ambient_dim())?;
        Ok(self.constraint(g))
    }

    pub fn anchor(mut self, anchor: Point) -> Self {
        self.anchor = Some(anchor);
        self
    }

    pub fn interior_tol(mut self, tol: f64) -> Self {
        self.interior_tol = tol;
        self
    }

    /// Accepts constraints without the random-chord convexity check. Used for
    /// deliberately nonconvex instances (cusps, flat active gradients).
    pub fn skip_convexity_check(mut self) -> Self {
        self.check_convexity = false;
        self
    }

    pub fn build(self) -> Result<ConvexRegion> {
        if self.constraints.is_empty() {
            return Err(Error::InvalidRegion("at least one constraint is required".into()));
        }
        if !(self.interior_tol > 0.0 && self.interior_tol.is_finite()) {
            return Err(Error::InvalidRegion(format!("interior_tol must be positive, got {}", self.interior_tol)));
        }
        let ambient = self.manifold.ambient_dim();
        if let Some(i) = self.constraints.iter().position(|g| g.ambient_dim() != ambient) {
            return Err(Error::InvalidRegion(format!(
                "constraint {} is over {} coordinates, the manifold has {ambient}",
                i + 1,
                self.constraints[i].ambient_dim()
            )));
        }
        let anchor = self.anchor.ok_or_else(|| Error::InvalidRegion("an anchor point is required".into()))?;
        if anchor.manifold() != self.manifold {
            return Err(Error::ManifoldMismatch { left: self.manifold, right: anchor.manifold() });
        }
        let region = ConvexRegion {
            manifold: self.manifold,
            constraints: self.constraints,
            interior_tol: self.interior_tol,
            anchor,
        };
        let worst = region.max_constraint(&region.anchor)?;
        if worst > -region.interior_tol {
            return Err(Error::InvalidRegion(format!(
                "anchor is not strictly feasible (max constraint {worst:e})"
            )));
        }
        if self.check_convexity {
            region.spot_check_convexity()?;
        }
        Ok(region)
    }
}

impl ConvexRegion {
    pub fn builder(manifold: ManifoldSpec) -> RegionBuilder {
        RegionBuilder::new(manifold)
    }

    /// Parses each constraint and builds a checked region.
    pub fn from_sources(manifold: ManifoldSpec, sources: &[&str], anchor: Point) -> Result<Self> {
        let mut b = RegionBuilder::new(manifold).anchor(anchor);
        for s in sources {
            b = b.parse_constraint(s)?;
        }
        b.build()
    }

    pub fn manifold(&self) -> ManifoldSpec {
        self.manifold
    }

    pub fn constraints(&self) -> &[Expr] {
        &self.constraints
    }

    pub fn interior_tol(&self) -> f64 {
        self.interior_tol
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    /// Region with extra constraints appended (a subset of this one).
    pub fn with_constraints(&self, extra: Vec<Expr>) -> Result<Self> {
        let mut b = RegionBuilder::new(self.manifold).anchor(self.anchor.clone()).interior_tol(self.interior_tol);
        for g in self.constraints.iter().cloned().chain(extra) {
            b = b.constraint(g);
        }
        b.build()
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.manifold() != self.manifold {
            return Err(Error::ManifoldMismatch { left: self.manifold, right: x.manifold() });
        }
        Ok(())
    }

    pub fn constraint_values(&self, x: &Point) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.constraints.iter().map(|g| g.evaluate(x).map_err(Error::from)).collect()
    }

    pub fn max_constraint(&self, x: &Point) -> Result<f64> {
        Ok(self.constraint_values(x)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn classify(&self, max_constraint: f64) -> Membership {
        if max_constraint <= -self.interior_tol {
            Membership::Interior
        } else if max_constraint >= self.interior_tol {
            Membership::Exterior
        } else {
            Membership::Boundary
        }
    }

    pub fn member(&self, x: &Point) -> Result<Membership> {
        Ok(self.classify(self.max_constraint(x)?))
    }

    /// Indices with |gᵢ(x)| ≤ interior_tol.
    pub fn active_set(&self, x: &Point) -> Result<Vec<usize>> {
        let values = self.constraint_values(x)?;
        Ok(values.iter().enumerate().filter(|(_, g)| g.abs() <= self.interior_tol).map(|(i, _)| i).collect())
    }

    /// Working radius ε(p) = min(r(p)/2, d(p, anchor)/4 + 0.1, 0.5).
    pub fn epsilon(&self, p: &Point) -> Result<f64> {
        if self.member(p)? == Membership::Exterior {
            return Err(Error::NotInSet);
        }
        let d = p.dist(&self.anchor)?;
        Ok((0.5 * convexity_radius_bound(p)).min(0.25 * d + 0.1).min(0.5))
    }

    // Evaluation failures count as "not interior": a constraint undefined at
    // a point certainly does not certify it.
    pub(crate) fn is_interior(&self, x: &Point) -> bool {
        matches!(self.max_constraint(x), Ok(m) if m <= -self.interior_tol)
    }

    fn is_nonpositive(&self, x: &Point) -> bool {
        matches!(self.max_constraint(x), Ok(m) if m <= 0.0)
    }

    /// Seeded interior points near the anchor, shrunk geodesically toward it
    /// when a draw lands outside.
    pub fn sample_interior(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        let radius = 0.9 * self.epsilon(&self.anchor)?;
        let mut rng = rng(seed);
        let mut out = Vec::with_capacity(count);
        let mut draws = 0;
        while out.len() < count && draws < MAX_DRAWS {
            draws += 1;
            let v = tangent_in_ball(&self.anchor, radius, &mut rng);
            if v.is_zero() {
                continue;
            }
            if let Some(x) = self.shrink_into_interior(&v)? {
                out.push(x);
            }
        }
        if out.len() < count {
            return Err(Error::SamplingExhausted { wanted: count, got: out.len() });
        }
        Ok(out)
    }

    fn shrink_into_interior(&self, v: &TangentVector) -> Result<Option<Point>> {
        let x = v.exp()?;
        if self.is_interior(&x) {
            return Ok(Some(x));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..SHRINK_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.is_interior(&v.scale(mid).exp()?) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo > 0.0).then(|| v.scale(lo).exp()).transpose()
    }

    /// Last point with max gᵢ ≤ 0 on the geodesic from `inside` to `outside`.
    pub fn boundary_between(&self, inside: &Point, outside: &Point) -> Result<Point> {
        let v = inside.log(outside)?;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.is_nonpositive(&v.scale(mid).exp()?) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        v.scale(lo).exp()
    }

    fn check_projectable(&self, q: &Point) -> Result<()> {
        self.check_point(q)?;
        let distance = q.dist(&self.anchor)?;
        let limit = 0.9 * convexity_radius_bound(&self.anchor);
        if distance > limit {
            return Err(Error::OutsideProjectionNeighborhood { distance, limit });
        }
        Ok(())
    }

    fn trivial_projection(q: &Point) -> ProjectionResult {
        ProjectionResult { q_star: q.clone(), distance: 0.0, vi_residual: 0.0, iterations: 0, converged: true }
    }

    /// Metric projection Pr_C(q), certified by the variational inequality.
    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        self.check_projectable(q)?;
        if self.member(q)? != Membership::Exterior {
            return Ok(Self::trivial_projection(q));
        }
        let start = self.boundary_between(&self.anchor, q)?;
        self.run_projection(q, start)
    }

    /// Same as [`project`](Self::project) with an explicit solver start.
    pub fn project_from(&self, q: &Point, start: &Point) -> Result<ProjectionResult> {
        self.check_projectable(q)?;
        self.check_point(start)?;
        if self.member(q)? != Membership::Exterior {
            return Ok(Self::trivial_projection(q));
        }
        self.run_projection(q, start.clone())
    }

    // Minimizes d(q,x)² + ρ Σ max(gᵢ + μᵢ/2ρ, 0)² by Riemannian gradient
    // descent with Armijo backtracking. The multiplier shift μ is what lets
    // the iterate reach the boundary band without ρ → ∞.
    fn run_projection(&self, q: &Point, start: Point) -> Result<ProjectionResult> {
        let l = self.constraints.len();
        let mut mu = vec![0.0; l];
        let mut rho = RHO_INIT;
        let mut x = start;
        let mut step: f64 = 0.5;
        let mut iterations = 0;
        let mut prev_viol = f64::INFINITY;
        let mut converged = false;

        let (mut val, mut grad) = self.al_value_grad(q, &x, &mu, rho)?;
        while iterations < MAX_PROJECTION_ITERS {
            let mut inner_done = false;
            while iterations < MAX_PROJECTION_ITERS {
                let gn = grad.norm();
                if gn <= GRAD_TOL {
                    inner_done = true;
                    break;
                }
                let noise = 1e-12 * val.abs().max(1.0);
                let s0 = step.min(MAX_STEP_LENGTH / gn);
                let next = if s0 * gn * gn > noise {
                    self.armijo_step(q, &grad, val, s0, &mu, rho)?
                } else {
                    // Value differences are below rounding here; accept on a
                    // decrease of the gradient norm instead.
                    self.gradient_norm_step(q, &grad, s0, &mu, rho)
                };
                let Some((trial, s, tv, tgrad)) = next else {
                    inner_done = true;
                    break;
                };
                let decrease = s * gn * gn;
                if decrease > noise {
                    // Next trial step from the secant curvature along this step.
                    step = 2.0 * s;
                    let curvature = 2.0 * (tv - val + decrease) / (s * decrease);
                    if curvature > 0.0 && curvature.is_finite() {
                        step = 1.0 / curvature;
                    }
                }
                x = trial;
                val = tv;
                grad = tgrad;
                iterations += 1;
            }
            let g = self.constraint_values(&x)?;
            let viol = g
                .iter()
                .zip(&mu)
                .map(|(gi, mi)| gi.max(-mi / (2.0 * rho)).abs())
                .fold(0.0, f64::max);
            if inner_done && viol <= FEAS_TOL {
                converged = true;
                break;
            }
            for (mi, gi) in mu.iter_mut().zip(&g) {
                *mi = (*mi + 2.0 * rho * gi).max(0.0);
            }
            if viol > 0.25 * prev_viol {
                rho *= 2.0;
            }
            prev_viol = viol;
            (val, grad) = self.al_value_grad(q, &x, &mu, rho)?;
        }

        if self.member(&x)? == Membership::Exterior {
            x = self.boundary_between(&self.anchor, &x)?;
        }
        let distance = q.dist(&x)?;
        let vi_residual = self.vi_check(q, &x, VI_PROBES, 0)?;
        let result = ProjectionResult { q_star: x, distance, vi_residual, iterations, converged };
        if vi_residual <= VI_TOL {
            Ok(result)
        } else {
            Err(Error::ProjectionNotCertified { best: Box::new(result) })
        }
    }

    fn armijo_step(
        &self,
        q: &Point,
        grad: &TangentVector,
        val: f64,
        mut s: f64,
        mu: &[f64],
        rho: f64,
    ) -> Result<Option<(Point, f64, f64, TangentVector)>> {
        let gn = grad.norm();
        let slack = 1e-15 * val.abs().max(1.0);
        while s * gn > 1e-17 {
            if let Ok(trial) = grad.scale(-s).exp() {
                if let Ok(tv) = self.al_value(q, &trial, mu, rho) {
                    if tv <= val - ARMIJO_C * s * gn * gn + slack {
                        let (tv, tgrad) = self.al_value_grad(q, &trial, mu, rho)?;
                        return Ok(Some((trial, s, tv, tgrad)));
                    }
                }
            }
            s *= 0.5;
        }
        Ok(None)
    }

    fn gradient_norm_step(
        &self,
        q: &Point,
        grad: &TangentVector,
        mut s: f64,
        mu: &[f64],
        rho: f64,
    ) -> Option<(Point, f64, f64, TangentVector)> {
        let gn = grad.norm();
        for _ in 0..40 {
            if let Ok(trial) = grad.scale(-s).exp() {
                if let Ok((tv, tgrad)) = self.al_value_grad(q, &trial, mu, rho) {
                    if tgrad.norm() < gn {
                        return Some((trial, s, tv, tgrad));
                    }
                }
            }
            s *= 0.5;
        }
        None
    }

    fn al_value(&self, q: &Point, x: &Point, mu: &[f64], rho: f64) -> Result<f64> {
        let d = x.dist(q)?;
        let mut val = d * d;
        for (g, m) in self.constraints.iter().zip(mu) {
            let s = g.evaluate(x)? + m / (2.0 * rho);
            if s > 0.0 {
                val += rho * s * s;
            }
        }
        Ok(val)
    }

    fn al_value_grad(&self, q: &Point, x: &Point, mu: &[f64], rho: f64) -> Result<(f64, TangentVector)> {
        let log = x.log(q)?;
        let d = log.norm();
        let mut val = d * d;
        let mut coords: Vec<f64> = log.coords().iter().map(|c| -2.0 * c).collect();
        for (g, m) in self.constraints.iter().zip(mu) {
            let s = g.evaluate(x)? + m / (2.0 * rho);
            if s > 0.0 {
                val += rho * s * s;
                let gg = riemannian_grad(g, x)?;
                coords.iter_mut().zip(gg.coords()).for_each(|(c, gi)| *c += 2.0 * rho * s * gi);
            }
        }
        if !val.is_finite() || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NumericalBreakdown { iteration: 0, what: "non-finite projection objective".into() });
        }
        Ok((val, x.project_tangent(&coords)?))
    }

    /// max over interior probes z of ⟨log_{q*} q, log_{q*} z⟩ / (‖·‖‖·‖).
    pub fn vi_check(&self, q: &Point, q_star: &Point, probes: usize, seed: u64) -> Result<f64> {
        self.check_point(q)?;
        self.check_point(q_star)?;
        let u = q_star.log(q)?;
        let un = u.norm();
        if un == 0.0 {
            return Err(Error::DegenerateProjection);
        }
        let mut worst = f64::NEG_INFINITY;
        for z in self.sample_interior(probes, seed)? {
            let v = q_star.log(&z)?;
            let vn = v.norm();
            if vn > 0.0 {
                worst = worst.max(u.inner(&v)? / (un * vn));
            }
        }
        Ok(worst)
    }

    // Definition-level check of geodesic convexity on random chords near the anchor.
    fn spot_check_convexity(&self) -> Result<()> {
        let radius = (0.45 * convexity_radius_bound(&self.anchor)).min(1.0);
        let mut rng = rng(derive_seed(0, CONVEXITY_STREAM));
        for _ in 0..CONVEXITY_CHORDS {
            let x = tangent_in_ball(&self.anchor, radius, &mut rng).exp()?;
            let y = tangent_in_ball(&self.anchor, radius, &mut rng).exp()?;
            let v = x.log(&y)?;
            for (j, g) in self.constraints.iter().enumerate() {
                let (Ok(gx), Ok(gy)) = (g.evaluate(&x), g.evaluate(&y)) else { continue };
                for t in [0.25, 0.5, 0.75] {
                    let Ok(gz) = g.evaluate(&v.scale(t).exp()?) else { continue };
                    let violation = gz - ((1.0 - t) * gx + t * gy);
                    if violation > CONVEXITY_SLACK {
                        return Err(Error::NotGeodesicConvex { constraint: j + 1, violation });
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn disk() -> ConvexRegion {
        let m = ManifoldSpec::euclidean(2);
        ConvexRegion::from_sources(m, &["x1*x1 + x2*x2 - 1"], m.origin()).unwrap()
    }

    fn cap() -> ConvexRegion {
        let m = ManifoldSpec::sphere(2);
        ConvexRegion::from_sources(m, &["gdist(1, 0, 0) - 0.5"], m.origin()).unwrap()
    }

    fn r2(x: f64, y: f64) -> Point {
        ManifoldSpec::euclidean(2).point(vec![x, y]).unwrap()
    }

    #[test]
    fn membership_examples() {
        let d = disk();
        assert_eq!(d.member(&r2(0.0, 0.0)).unwrap(), Membership::Interior);
        assert_eq!(d.member(&r2(2.0, 0.0)).unwrap(), Membership::Exterior);
        assert_eq!(d.member(&r2(1.0, 0.0)).unwrap(), Membership::Boundary);
        let s = ManifoldSpec::sphere(2).origin();
        assert!(matches!(d.member(&s), Err(Error::ManifoldMismatch { .. })));
    }

    #[test]
    fn construction_rejects_bad_regions() {
        let m = ManifoldSpec::euclidean(2);
        let err = ConvexRegion::from_sources(m, &["x1*x1 + x2*x2 - 1"], r2(1.0, 0.0)).unwrap_err();
        assert_eq!(err.kind(), "InvalidRegion");
        let err = ConvexRegion::from_sources(m, &["x2 - x1^3"], r2(0.5, -0.5)).unwrap_err();
        assert_eq!(err.kind(), "NotGeodesicConvex");
        assert!(ConvexRegion::builder(m).anchor(m.origin()).build().is_err());
        let ok = ConvexRegion::builder(m)
            .parse_constraint("x2 - x1^3")
            .unwrap()
            .anchor(r2(0.5, 0.0))
            .skip_convexity_check()
            .build();
        assert!(ok.is_ok());
    }

    #[test]
    fn epsilon_formula() {
        let d = disk();
        assert_abs_diff_eq!(d.epsilon(&r2(0.0, 0.0)).unwrap(), 0.1);
        assert_abs_diff_eq!(d.epsilon(&r2(1.0, 0.0)).unwrap(), 0.35);
        assert!(matches!(d.epsilon(&r2(3.0, 0.0)), Err(Error::NotInSet)));
        assert!(cap().epsilon(&ManifoldSpec::sphere(2).origin()).unwrap() <= std::f64::consts::FRAC_PI_4);
    }

    #[test]
    fn interior_samples() {
        let d = disk();
        let one = d.sample_interior(1, 5).unwrap();
        assert!(d.max_constraint(&one[0]).unwrap() < -d.interior_tol());
        let many = d.sample_interior(100, 1).unwrap();
        assert_eq!(many.len(), 100);
        for i in 0..many.len() {
            for j in 0..i {
                assert!(!many[i].same_as(&many[j]));
            }
        }
        let c = cap();
        let e1 = ManifoldSpec::sphere(2).origin();
        for z in c.sample_interior(50, 2).unwrap() {
            assert!(z.dist(&e1).unwrap() < 0.5);
        }
        assert_eq!(d.sample_interior(10, 3).unwrap(), d.sample_interior(10, 3).unwrap());
    }

    #[test]
    fn projection_examples() {
        let d = disk();
        let inside = d.project(&r2(0.2, 0.3)).unwrap();
        assert_eq!(inside.q_star, r2(0.2, 0.3));
        assert_eq!(inside.distance, 0.0);

        let p = d.project(&r2(2.0, 0.0)).unwrap();
        assert!(p.converged);
        assert_abs_diff_eq!(p.q_star.coords()[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.q_star.coords()[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.distance, 1.0, epsilon = 1e-9);
        assert!(p.vi_residual <= VI_TOL);
        assert_ne!(d.member(&p.q_star).unwrap(), Membership::Exterior);
    }

    #[test]
    fn cap_projection_lies_on_radial_geodesic() {
        let c = cap();
        let e1 = ManifoldSpec::sphere(2).origin();
        let w = e1.tangent(vec![0.0, 0.6, 0.8]).unwrap();
        let q = w.exp().unwrap();
        let p = c.project(&q).unwrap();
        let expected = w.scale(0.5).exp().unwrap();
        assert_abs_diff_eq!(p.distance, 0.5, epsilon = 1e-9);
        assert!(p.q_star.dist(&expected).unwrap() < 1e-8);
        assert!(p.vi_residual <= VI_TOL);
        assert_eq!(c.member(&p.q_star).unwrap(), Membership::Boundary);
    }

    #[test]
    fn vi_certificate_rejects_wrong_projection() {
        let d = disk();
        let q = r2(2.0, 0.0);
        assert!(d.vi_check(&q, &r2(1.0, 0.0), 64, 0).unwrap() <= 0.0);
        assert!(d.vi_check(&q, &r2(0.0, 1.0), 64, 0).unwrap() > 0.1);
        assert!(matches!(d.vi_check(&q, &q, 8, 0), Err(Error::DegenerateProjection)));
    }

    #[test]
    fn projection_neighborhood_enforced() {
        let c = cap();
        let far = ManifoldSpec::sphere(2).point(vec![-1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(c.project(&far), Err(Error::OutsideProjectionNeighborhood { .. })));
    }
}
