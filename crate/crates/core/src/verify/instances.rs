//! Seeded built-in instances shared by the verification criteria.

use rand::Rng;

use crate::error::Result;
use crate::manifold::{ManifoldKind, ManifoldSpec, Point, TangentVector};
use crate::region::{ConvexRegion, Membership};
use crate::sampling::{rng, tangent_in_ball, unit_tangent, SeededRng};

pub const KINDS: [ManifoldKind; 3] = [ManifoldKind::Euclidean, ManifoldKind::Sphere, ManifoldKind::Hyperboloid];

// Exterior points stay inside this distance of the anchor on the sphere,
// below 0.9 of its convexity radius.
const SPHERE_REACH: f64 = 1.35;
const FLAT_REACH: f64 = 1.0;

pub fn coords_text(coords: &[f64]) -> String {
    coords.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(", ")
}

pub fn ball_constraint(center: &Point, radius: f64) -> String {
    format!("gdist({}) - {radius:?}", coords_text(center.coords()))
}

fn center_near(anchor: &Point, max_offset: f64, rng: &mut SeededRng) -> Result<Point> {
    tangent_in_ball(anchor, max_offset, rng).exp()
}

/// Random two-dimensional region around the manifold origin: a ball, a lens
/// of two balls, or (on euclidean space) a ball cut by a half-plane and, on
/// curved spaces, three intersecting balls.
pub fn random_region(kind: ManifoldKind, rng: &mut SeededRng) -> Result<ConvexRegion> {
    let m = ManifoldSpec::new(kind, 2)?;
    let anchor = m.origin();
    let mut sources = Vec::new();
    match rng.random_range(0..3) {
        0 => {
            let c = center_near(&anchor, 0.3, rng)?;
            sources.push(ball_constraint(&c, rng.random_range(0.5..0.8)));
        }
        1 => {
            for _ in 0..2 {
                let c = unit_tangent(&anchor, rng).scale(rng.random_range(0.1..0.3)).exp()?;
                sources.push(ball_constraint(&c, rng.random_range(0.45..0.7)));
            }
        }
        _ => {
            let c = center_near(&anchor, 0.2, rng)?;
            sources.push(ball_constraint(&c, rng.random_range(0.5..0.8)));
            if kind == ManifoldKind::Euclidean {
                let n = unit_tangent(&anchor, rng);
                let b: f64 = rng.random_range(0.2..0.5);
                let [a1, a2] = [n.coords()[0], n.coords()[1]];
                sources.push(format!("{a1:?}*x1 + {a2:?}*x2 - {b:?}"));
            } else {
                for _ in 0..2 {
                    let c = unit_tangent(&anchor, rng).scale(rng.random_range(0.1..0.3)).exp()?;
                    sources.push(ball_constraint(&c, rng.random_range(0.45..0.7)));
                }
            }
        }
    }
    let refs: Vec<&str> = sources.iter().map(String::as_str).collect();
    ConvexRegion::from_sources(m, &refs, anchor)
}

/// Distance from the anchor to the boundary along the unit direction `w`.
pub fn boundary_radius(region: &ConvexRegion, w: &TangentVector) -> Result<f64> {
    let exterior = |t: f64| -> Result<bool> { Ok(region.member(&w.scale(t).exp()?)? == Membership::Exterior) };
    let mut hi = 0.25;
    while !exterior(hi)? {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if region.max_constraint(&w.scale(mid).exp()?)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub struct ProjectionInstance {
    pub region: ConvexRegion,
    pub q: Point,
}

/// Region plus an exterior point within the projection neighborhood.
pub fn projection_instance(kind: ManifoldKind, seed: u64) -> Result<ProjectionInstance> {
    let mut rng = rng(seed);
    let region = random_region(kind, &mut rng)?;
    let anchor = region.anchor().clone();
    let reach = if kind == ManifoldKind::Sphere { SPHERE_REACH } else { FLAT_REACH + 1.0 };
    loop {
        let w = unit_tangent(&anchor, &mut rng);
        let r = boundary_radius(&region, &w)?;
        let top = (r + FLAT_REACH).min(reach);
        if top <= r + 0.05 {
            continue;
        }
        let q = w.scale(rng.random_range(r + 0.05..top)).exp()?;
        if region.member(&q)? == Membership::Exterior {
            return Ok(ProjectionInstance { region, q });
        }
    }
}

/// Boundary point of a random region, reached by bisection along a random ray.
pub fn boundary_instance(kind: ManifoldKind, seed: u64) -> Result<(ConvexRegion, Point)> {
    let mut rng = rng(seed);
    let region = random_region(kind, &mut rng)?;
    let w = unit_tangent(region.anchor(), &mut rng);
    let r = boundary_radius(&region, &w)?;
    let p = w.scale(r).exp()?;
    Ok((region, p))
}

/// Ball through p, centred beyond the anchor on the geodesic from p, so that
/// adding it to a region keeps both p on the boundary and the anchor inside.
pub fn inner_ball_through(region: &ConvexRegion, p: &Point) -> Result<String> {
    let to_anchor = p.log(region.anchor())?;
    let d = to_anchor.norm();
    let radius = d + 0.1;
    let center = to_anchor.scale(radius / d).exp()?;
    Ok(ball_constraint(&center, center.dist(p)?))
}

pub struct AffineInstance {
    pub region: ConvexRegion,
    pub point: Point,
    pub objective: String,
    /// Outer normals of the active constraints.
    pub active_normals: Vec<Vec<f64>>,
    pub active_indices: Vec<usize>,
    /// Exact gradient c of the linear objective c·x.
    pub objective_gradient: Vec<f64>,
}

/// Euclidean polygon {aᵢ·x ≤ bᵢ} with a vertex or edge point x̄ at which a
/// linear objective is KKT-stationary with known positive multipliers.
pub fn affine_instance(seed: u64) -> Result<AffineInstance> {
    let mut rng = rng(seed);
    let m = ManifoldSpec::euclidean(2);
    let xbar = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let n_active = rng.random_range(1..=2);
    let n_inactive = rng.random_range(1..=3);
    let mut normals: Vec<[f64; 2]> = Vec::new();
    let first = rng.random_range(0.0..std::f64::consts::TAU);
    normals.push([first.cos(), first.sin()]);
    if n_active == 2 {
        // second normal 30 to 150 degrees away keeps the vertex well conditioned
        let second = first + rng.random_range(0.5..2.6);
        normals.push([second.cos(), second.sin()]);
    }
    let mut lambda = Vec::new();
    let mut c = [0.0, 0.0];
    for a in &normals {
        let l: f64 = rng.random_range(0.2..2.0);
        c[0] -= l * a[0];
        c[1] -= l * a[1];
        lambda.push(l);
    }
    let mut sources = Vec::new();
    for a in &normals {
        let b = a[0] * xbar[0] + a[1] * xbar[1];
        sources.push(format!("{:?}*x1 + {:?}*x2 - {b:?}", a[0], a[1]));
    }
    // interior direction: against the sum of active normals
    let inward = {
        let s = [normals.iter().map(|a| a[0]).sum::<f64>(), normals.iter().map(|a| a[1]).sum::<f64>()];
        let n = (s[0] * s[0] + s[1] * s[1]).sqrt();
        [-s[0] / n, -s[1] / n]
    };
    let anchor = [xbar[0] + 0.2 * inward[0], xbar[1] + 0.2 * inward[1]];
    for _ in 0..n_inactive {
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let a = [t.cos(), t.sin()];
        let slack = rng.random_range(0.1..1.0);
        let at = |x: [f64; 2]| a[0] * x[0] + a[1] * x[1];
        let b = at(xbar).max(at(anchor)) + slack;
        sources.push(format!("{:?}*x1 + {:?}*x2 - {b:?}", a[0], a[1]));
    }
    let refs: Vec<&str> = sources.iter().map(String::as_str).collect();
    let region = ConvexRegion::from_sources(m, &refs, m.point(anchor.to_vec())?)?;
    Ok(AffineInstance {
        region,
        point: m.point(xbar.to_vec())?,
        objective: format!("{:?}*x1 + {:?}*x2", c[0], c[1]),
        active_normals: normals.iter().map(|a| a.to_vec()).collect(),
        active_indices: (0..n_active).collect(),
        objective_gradient: c.to_vec(),
    })
}
