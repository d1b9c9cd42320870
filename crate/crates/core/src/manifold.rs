//! Closed-form Riemannian geometry on a fixed catalog of embedded manifolds.
//!
//! Points and tangent vectors are stored in ambient coordinates:
//!
//! * `euclidean`: ℝⁿ, ambient dimension n, flat metric.
//! * `sphere`: unit sphere Sⁿ ⊂ ℝⁿ⁺¹ with the induced dot product.
//! * `hyperboloid`: upper sheet of ⟨x,x⟩_L = −1 in ℝⁿ⁺¹, where
//!   ⟨x,y⟩_L = −x₀y₀ + Σᵢ≥₁ xᵢyᵢ. The Lorentz form is positive definite on
//!   tangent spaces.
//!
//! Every operation is exact up to floating point; no geodesic ODE is
//! integrated anywhere.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stand-in for an infinite convexity radius (Euclidean space, Hadamard manifolds).
pub const UNBOUNDED_RADIUS: f64 = 1e18;

/// Tolerance on the embedding equation of a [`Point`].
pub const POINT_TOL: f64 = 1e-12;
/// Tolerance on the tangency condition of a [`TangentVector`].
pub const TANGENT_TOL: f64 = 1e-10;
/// Coordinates closer than this (max-abs) are the same base point.
pub const BASE_MATCH_TOL: f64 = 1e-12;
/// Sphere logarithm refuses pairs closer than this to antipodal.
pub const ANTIPODAL_GUARD: f64 = 1e-9;

const BASIS_SKIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Euclidean,
    Sphere,
    Hyperboloid,
}

impl ManifoldKind {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::Euclidean => "euclidean",
            ManifoldKind::Sphere => "sphere",
            ManifoldKind::Hyperboloid => "hyperboloid",
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(ManifoldKind::Euclidean),
            "sphere" => Ok(ManifoldKind::Sphere),
            "hyperboloid" => Ok(ManifoldKind::Hyperboloid),
            other => Err(Error::InvalidManifold(format!("unknown manifold `{other}`"))),
        }
    }
}

/// A manifold from the catalog together with its intrinsic dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    dim: usize,
}

impl fmt::Display for ManifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind, self.dim)
    }
}

impl ManifoldSpec {
    pub fn new(kind: ManifoldKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidManifold("dimension must be at least 1".into()));
        }
        Ok(ManifoldSpec { kind, dim })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(ManifoldKind::Euclidean, dim).expect("positive dimension")
    }

    pub fn sphere(dim: usize) -> Self {
        Self::new(ManifoldKind::Sphere, dim).expect("positive dimension")
    }

    pub fn hyperboloid(dim: usize) -> Self {
        Self::new(ManifoldKind::Hyperboloid, dim).expect("positive dimension")
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    /// Intrinsic dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// n for euclidean, n + 1 for the embedded manifolds.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean => self.dim,
            ManifoldKind::Sphere | ManifoldKind::Hyperboloid => self.dim + 1,
        }
    }

    /// Ambient bilinear form: dot product, or the Lorentz form on the hyperboloid.
    pub fn ambient_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean | ManifoldKind::Sphere => dot(a, b),
            ManifoldKind::Hyperboloid => lorentz(a, b),
        }
    }

    /// Validates `coords` against the embedding equation.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        self.check_len(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NotOnManifold { manifold: *self, defect: f64::INFINITY });
        }
        let defect = self.embedding_defect(&coords);
        if defect > POINT_TOL {
            return Err(Error::NotOnManifold { manifold: *self, defect });
        }
        Ok(Point { manifold: *self, coords })
    }

    /// Maps arbitrary ambient coordinates onto the manifold: unit
    /// normalization on the sphere, x₀ = √(1 + Σxᵢ²) on the hyperboloid.
    pub fn project_point(&self, mut coords: Vec<f64>) -> Result<Point> {
        self.check_len(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NotOnManifold { manifold: *self, defect: f64::INFINITY });
        }
        match self.kind {
            ManifoldKind::Euclidean => {}
            ManifoldKind::Sphere => {
                let n = norm2(&coords);
                if n == 0.0 {
                    return Err(Error::NotOnManifold { manifold: *self, defect: 1.0 });
                }
                coords.iter_mut().for_each(|c| *c /= n);
            }
            ManifoldKind::Hyperboloid => {
                let spatial: f64 = coords[1..].iter().map(|c| c * c).sum();
                coords[0] = (1.0 + spatial).sqrt();
            }
        }
        Ok(Point { manifold: *self, coords })
    }

    /// Canonical base point: the origin, e₁ on the sphere, (1,0,…,0) on the hyperboloid.
    pub fn origin(&self) -> Point {
        let mut coords = vec![0.0; self.ambient_dim()];
        if self.kind != ManifoldKind::Euclidean {
            coords[0] = 1.0;
        }
        Point { manifold: *self, coords }
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got });
        }
        Ok(())
    }

    fn embedding_defect(&self, coords: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean => 0.0,
            ManifoldKind::Sphere => (norm2(coords) - 1.0).abs(),
            ManifoldKind::Hyperboloid => {
                if coords[0] <= 0.0 {
                    return f64::INFINITY;
                }
                // Rounding in the Lorentz form grows like x₀².
                (lorentz(coords, coords) + 1.0).abs() / coords[0].powi(2).max(1.0)
            }
        }
    }
}

/// A point of a catalog manifold in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    manifold: ManifoldSpec,
    coords: Vec<f64>,
}

impl Point {
    pub fn manifold(&self) -> ManifoldSpec {
        self.manifold
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Same manifold and coordinates equal within [`BASE_MATCH_TOL`].
    pub fn same_as(&self, other: &Point) -> bool {
        self.manifold == other.manifold && max_abs_diff(&self.coords, &other.coords) <= BASE_MATCH_TOL
    }

    pub fn dist(&self, other: &Point) -> Result<f64> {
        dist(self, other)
    }

    pub fn log(&self, other: &Point) -> Result<TangentVector> {
        log_map(self, other)
    }

    pub fn zero_vector(&self) -> TangentVector {
        TangentVector { base: self.clone(), coords: vec![0.0; self.coords.len()] }
    }

    /// Orthogonal projection of an ambient vector onto the tangent space here.
    pub fn project_tangent(&self, ambient: &[f64]) -> Result<TangentVector> {
        self.manifold.check_len(ambient.len())?;
        let coords = tangent_part(self.manifold.kind, &self.coords, ambient);
        Ok(TangentVector { base: self.clone(), coords })
    }

    /// Validated tangent vector at this point.
    pub fn tangent(&self, coords: Vec<f64>) -> Result<TangentVector> {
        TangentVector::new(self.clone(), coords)
    }
}

/// A tangent vector in ambient coordinates, attached to its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: Point,
    coords: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, coords: Vec<f64>) -> Result<Self> {
        base.manifold.check_len(coords.len())?;
        let m = base.manifold;
        let defect = match m.kind {
            ManifoldKind::Euclidean => 0.0,
            _ => {
                let scale = (norm2(&base.coords) * norm2(&coords)).max(1.0);
                m.ambient_inner(&base.coords, &coords).abs() / scale
            }
        };
        if defect > TANGENT_TOL || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NotTangent { defect });
        }
        Ok(TangentVector { base, coords })
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn manifold(&self) -> ManifoldSpec {
        self.base.manifold
    }

    pub fn norm(&self) -> f64 {
        self.base.manifold.ambient_inner(&self.coords, &self.coords).max(0.0).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        TangentVector { base: self.base.clone(), coords: self.coords.iter().map(|c| c * s).collect() }
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<TangentVector> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(1.0 / n))
    }

    pub fn add(&self, other: &TangentVector) -> Result<TangentVector> {
        self.check_base(other)?;
        Ok(TangentVector {
            base: self.base.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &TangentVector) -> Result<TangentVector> {
        self.check_base(other)?;
        Ok(TangentVector {
            base: self.base.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn inner(&self, other: &TangentVector) -> Result<f64> {
        metric_inner(self, other)
    }

    pub fn exp(&self) -> Result<Point> {
        exp_map(self)
    }

    fn check_base(&self, other: &TangentVector) -> Result<()> {
        if self.base.manifold != other.base.manifold {
            return Err(Error::ManifoldMismatch { left: self.base.manifold, right: other.base.manifold });
        }
        if !self.base.same_as(&other.base) {
            return Err(Error::BasePointMismatch);
        }
        Ok(())
    }
}

/// The geodesic t ↦ exp_base(t·velocity).
#[derive(Debug, Clone, PartialEq)]
pub struct Geodesic {
    velocity: TangentVector,
}

impl Geodesic {
    pub fn new(velocity: TangentVector) -> Self {
        Geodesic { velocity }
    }

    /// Minimal geodesic from `p` (t = 0) to `q` (t = 1).
    pub fn between(p: &Point, q: &Point) -> Result<Self> {
        Ok(Geodesic { velocity: log_map(p, q)? })
    }

    pub fn base(&self) -> &Point {
        self.velocity.base()
    }

    pub fn velocity(&self) -> &TangentVector {
        &self.velocity
    }

    pub fn at(&self, t: f64) -> Result<Point> {
        exp_map(&self.velocity.scale(t))
    }
}

/// ⟨u, v⟩ in the metric of the common tangent space.
pub fn metric_inner(u: &TangentVector, v: &TangentVector) -> Result<f64> {
    u.check_base(v)?;
    Ok(u.base.manifold.ambient_inner(&u.coords, &v.coords))
}

/// exp_p(v), renormalized onto the embedding surface.
pub fn exp_map(v: &TangentVector) -> Result<Point> {
    let p = &v.base;
    let m = p.manifold;
    if v.is_zero() {
        return Ok(p.clone());
    }
    let coords = match m.kind {
        ManifoldKind::Euclidean => p.coords.iter().zip(&v.coords).map(|(a, b)| a + b).collect(),
        ManifoldKind::Sphere => {
            let n = v.norm();
            if n >= PI {
                return Err(Error::BeyondInjectivityRadius { norm: n, limit: PI });
            }
            let (s, c) = n.sin_cos();
            p.coords.iter().zip(&v.coords).map(|(x, w)| c * x + s * w / n).collect()
        }
        ManifoldKind::Hyperboloid => {
            let n = v.norm();
            if n == 0.0 {
                return Ok(p.clone());
            }
            let (s, c) = (n.sinh(), n.cosh());
            p.coords.iter().zip(&v.coords).map(|(x, w)| c * x + s * w / n).collect()
        }
    };
    m.project_point(coords)
}

/// exp_p⁻¹(q): initial velocity of the minimal geodesic from p to q.
pub fn log_map(p: &Point, q: &Point) -> Result<TangentVector> {
    check_same_manifold(p, q)?;
    let m = p.manifold;
    let delta: Vec<f64> = q.coords.iter().zip(&p.coords).map(|(a, b)| a - b).collect();
    if delta.iter().all(|&d| d == 0.0) {
        return Ok(p.zero_vector());
    }
    let coords = match m.kind {
        ManifoldKind::Euclidean => delta,
        ManifoldKind::Sphere | ManifoldKind::Hyperboloid => {
            let d = dist(p, q)?;
            if m.kind == ManifoldKind::Sphere && d >= PI - ANTIPODAL_GUARD {
                return Err(Error::BeyondInjectivityRadius { norm: d, limit: PI - ANTIPODAL_GUARD });
            }
            // Tangential part of the chord q − p; accurate for nearby points.
            let u = tangent_part(m.kind, &p.coords, &delta);
            let un = m.ambient_inner(&u, &u).max(0.0).sqrt();
            if un == 0.0 || d == 0.0 {
                return Ok(p.zero_vector());
            }
            u.into_iter().map(|c| c * d / un).collect()
        }
    };
    Ok(TangentVector { base: p.clone(), coords })
}

/// Riemannian distance.
///
/// Computed from chord lengths (2·atan2 on the sphere, 2·asinh on the
/// hyperboloid), which agree with the arccos / arccosh forms but keep full
/// precision for nearby points and are exactly symmetric.
pub fn dist(p: &Point, q: &Point) -> Result<f64> {
    check_same_manifold(p, q)?;
    Ok(dist_coords(p.manifold.kind, &p.coords, &q.coords))
}

/// Distance between raw ambient coordinates assumed to lie on the manifold.
pub(crate) fn dist_coords(kind: ManifoldKind, p: &[f64], q: &[f64]) -> f64 {
    match kind {
        ManifoldKind::Euclidean => p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        ManifoldKind::Sphere => {
            let (mut diff, mut sum) = (0.0, 0.0);
            for (a, b) in p.iter().zip(q) {
                diff += (a - b) * (a - b);
                sum += (a + b) * (a + b);
            }
            2.0 * diff.sqrt().atan2(sum.sqrt())
        }
        ManifoldKind::Hyperboloid => {
            let chord2 = -(p[0] - q[0]).powi(2)
                + p[1..].iter().zip(&q[1..]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            2.0 * (0.5 * chord2.max(0.0).sqrt()).asinh()
        }
    }
}

/// Deterministic orthonormal basis of T_pM (Gram–Schmidt over the projected
/// ambient coordinate axes).
pub fn tangent_basis(p: &Point) -> Vec<TangentVector> {
    let m = p.manifold;
    let n_amb = m.ambient_dim();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m.dim);
    for axis in 0..n_amb {
        if basis.len() == m.dim {
            break;
        }
        let mut e = vec![0.0; n_amb];
        e[axis] = 1.0;
        let mut w = e;
        // Two passes: an axis nearly parallel to p leaves a short, cancelled
        // remainder after one projection, and normalizing it amplifies the error.
        for _ in 0..2 {
            w = tangent_part(m.kind, &p.coords, &w);
            for b in &basis {
                let c = m.ambient_inner(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let n = m.ambient_inner(&w, &w).max(0.0).sqrt();
        if n <= BASIS_SKIP_TOL {
            continue;
        }
        w.iter_mut().for_each(|c| *c /= n);
        basis.push(w);
    }
    basis.into_iter().map(|coords| TangentVector { base: p.clone(), coords }).collect()
}

/// A safe lower bound on the convexity radius r(p).
pub fn convexity_radius_bound(p: &Point) -> f64 {
    match p.manifold.kind {
        ManifoldKind::Sphere => FRAC_PI_2,
        ManifoldKind::Euclidean | ManifoldKind::Hyperboloid => UNBOUNDED_RADIUS,
    }
}

/// Tangent vector Σ cᵢeᵢ over a basis at a common base point.
pub fn combine(basis: &[TangentVector], coeffs: &[f64]) -> TangentVector {
    let base = basis[0].base.clone();
    let mut coords = vec![0.0; base.coords.len()];
    for (e, &c) in basis.iter().zip(coeffs) {
        coords.iter_mut().zip(&e.coords).for_each(|(x, ei)| *x += c * ei);
    }
    TangentVector { base, coords }
}

fn tangent_part(kind: ManifoldKind, p: &[f64], w: &[f64]) -> Vec<f64> {
    match kind {
        ManifoldKind::Euclidean => w.to_vec(),
        ManifoldKind::Sphere => {
            let c = dot(p, w);
            w.iter().zip(p).map(|(wi, pi)| wi - c * pi).collect()
        }
        ManifoldKind::Hyperboloid => {
            let c = lorentz(p, w);
            w.iter().zip(p).map(|(wi, pi)| wi + c * pi).collect()
        }
    }
}

fn check_same_manifold(p: &Point, q: &Point) -> Result<()> {
    if p.manifold != q.manifold {
        return Err(Error::ManifoldMismatch { left: p.manifold, right: q.manifold });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lorentz(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s1(x: f64, y: f64) -> Point {
        ManifoldSpec::sphere(1).point(vec![x, y]).unwrap()
    }

    #[test]
    fn ambient_dims() {
        assert_eq!(ManifoldSpec::euclidean(3).ambient_dim(), 3);
        assert_eq!(ManifoldSpec::sphere(2).ambient_dim(), 3);
        assert_eq!(ManifoldSpec::hyperboloid(1).ambient_dim(), 2);
        assert!(ManifoldSpec::new(ManifoldKind::Sphere, 0).is_err());
    }

    #[test]
    fn manifold_names_parse_exactly() {
        assert_eq!("sphere".parse::<ManifoldKind>().unwrap(), ManifoldKind::Sphere);
        assert!("Sphere".parse::<ManifoldKind>().is_err());
    }

    #[test]
    fn inner_products() {
        let p = s1(1.0, 0.0);
        let u = p.tangent(vec![0.0, 2.0]).unwrap();
        let v = p.tangent(vec![0.0, 3.0]).unwrap();
        assert_eq!(metric_inner(&u, &v).unwrap(), 6.0);
        assert_eq!(metric_inner(&p.zero_vector(), &p.zero_vector()).unwrap(), 0.0);

        let h = ManifoldSpec::hyperboloid(1).origin();
        let w = h.tangent(vec![0.0, 1.0]).unwrap();
        assert_eq!(metric_inner(&w, &w).unwrap(), 1.0);
    }

    #[test]
    fn inner_rejects_mismatched_bases() {
        let u = s1(1.0, 0.0).tangent(vec![0.0, 1.0]).unwrap();
        let v = s1(0.0, 1.0).tangent(vec![1.0, 0.0]).unwrap();
        assert!(matches!(metric_inner(&u, &v), Err(Error::BasePointMismatch)));
    }

    #[test]
    fn exp_examples() {
        let e = ManifoldSpec::euclidean(2);
        let v = e.origin().tangent(vec![1.0, 2.0]).unwrap();
        assert_eq!(exp_map(&v).unwrap().coords(), &[1.0, 2.0]);

        let q = exp_map(&s1(1.0, 0.0).tangent(vec![0.0, FRAC_PI_2]).unwrap()).unwrap();
        assert_abs_diff_eq!(q.coords()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.coords()[1], 1.0, epsilon = 1e-15);

        let h = ManifoldSpec::hyperboloid(1).origin();
        let q = exp_map(&h.tangent(vec![0.0, 1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(q.coords()[0], 1.5430806348152437, epsilon = 1e-14);
        assert_abs_diff_eq!(q.coords()[1], 1.1752011936438014, epsilon = 1e-14);
    }

    #[test]
    fn exp_zero_is_exact() {
        let p = ManifoldSpec::sphere(2).point(vec![0.6, 0.0, 0.8]).unwrap();
        assert_eq!(exp_map(&p.zero_vector()).unwrap(), p);
    }

    #[test]
    fn sphere_exp_refuses_beyond_pi() {
        let v = s1(1.0, 0.0).tangent(vec![0.0, PI]).unwrap();
        assert!(matches!(exp_map(&v), Err(Error::BeyondInjectivityRadius { .. })));
    }

    #[test]
    fn log_examples() {
        let p = s1(1.0, 0.0);
        assert!(log_map(&p, &p).unwrap().is_zero());
        let v = log_map(&p, &s1(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(v.coords()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.coords()[1], FRAC_PI_2, epsilon = 1e-15);

        let h = ManifoldSpec::hyperboloid(1);
        let q = h.point(vec![1f64.cosh(), 1f64.sinh()]).unwrap();
        let v = log_map(&h.origin(), &q).unwrap();
        assert_abs_diff_eq!(v.coords()[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.coords()[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn log_refuses_near_antipodal() {
        assert!(matches!(
            log_map(&s1(1.0, 0.0), &s1(-1.0, 0.0)),
            Err(Error::BeyondInjectivityRadius { .. })
        ));
    }

    #[test]
    fn dist_examples() {
        let p = s1(1.0, 0.0);
        assert_eq!(dist(&p, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(dist(&p, &s1(0.0, 1.0)).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        let h = ManifoldSpec::hyperboloid(1);
        let q = h.point(vec![2f64.cosh(), 2f64.sinh()]).unwrap();
        assert_abs_diff_eq!(dist(&h.origin(), &q).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn basis_examples() {
        let e = tangent_basis(&ManifoldSpec::euclidean(2).point(vec![3.0, -1.0]).unwrap());
        assert_eq!(e[0].coords(), &[1.0, 0.0]);
        assert_eq!(e[1].coords(), &[0.0, 1.0]);

        let b = tangent_basis(&s1(1.0, 0.0));
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].coords(), &[0.0, 1.0]);

        let h = ManifoldSpec::hyperboloid(1);
        let p = h.point(vec![1f64.cosh(), 1f64.sinh()]).unwrap();
        let b = tangent_basis(&p);
        assert_eq!(b.len(), 1);
        let e = b[0].coords();
        // Solve ⟨x,e⟩_L = 0, ⟨e,e⟩_L = 1 by hand: e = ±(sinh 1, cosh 1).
        assert_abs_diff_eq!(e[0].abs(), 1f64.sinh(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[1].abs(), 1f64.cosh(), epsilon = 1e-13);
        assert_abs_diff_eq!(-p.coords()[0] * e[0] + p.coords()[1] * e[1], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(-e[0] * e[0] + e[1] * e[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn convexity_bounds() {
        assert_eq!(convexity_radius_bound(&ManifoldSpec::sphere(2).origin()), FRAC_PI_2);
        assert_eq!(convexity_radius_bound(&ManifoldSpec::euclidean(2).origin()), UNBOUNDED_RADIUS);
        assert_eq!(convexity_radius_bound(&ManifoldSpec::hyperboloid(2).origin()), UNBOUNDED_RADIUS);
    }

    #[test]
    fn point_validation() {
        assert!(ManifoldSpec::sphere(1).point(vec![1.0, 1e-3]).is_err());
        assert!(ManifoldSpec::hyperboloid(1).point(vec![-1.0, 0.0]).is_err());
        assert!(ManifoldSpec::euclidean(2).point(vec![1.0]).is_err());
        let p = ManifoldSpec::sphere(2).project_point(vec![0.995, 0.0998, 0.0]).unwrap();
        assert_abs_diff_eq!(norm2(p.coords()), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tangent_validation() {
        let p = s1(1.0, 0.0);
        assert!(p.tangent(vec![1.0, 0.0]).is_err());
        let t = p.project_tangent(&[5.0, 2.0]).unwrap();
        assert_eq!(t.coords(), &[0.0, 2.0]);
    }
}
