use geoconvex::manifold::{tangent_basis, ManifoldKind, ManifoldSpec, Point, TangentVector};
use proptest::prelude::*;

fn manifold() -> impl Strategy<Value = ManifoldSpec> {
    (prop_oneof![Just(ManifoldKind::Euclidean), Just(ManifoldKind::Sphere), Just(ManifoldKind::Hyperboloid)], 1usize..5)
        .prop_map(|(k, d)| ManifoldSpec::new(k, d).unwrap())
}

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

// A point plus tangent coefficients in the standard basis at that point.
fn point_and_vector() -> impl Strategy<Value = (Point, Vec<f64>)> {
    manifold().prop_flat_map(|m| {
        let n = m.ambient_dim();
        (coords(n), coords(m.dim())).prop_filter_map("degenerate point", move |(c, v)| {
            m.project_point(c).ok().map(|p| (p, v))
        })
    })
}

fn tangent(p: &Point, coeffs: &[f64], scale: f64) -> TangentVector {
    let basis = tangent_basis(p);
    let mut v = p.zero_vector();
    for (e, c) in basis.iter().zip(coeffs) {
        v = v.add(&e.scale(c * scale)).unwrap();
    }
    v
}

// Keep sphere vectors short of the cut locus.
fn limit(p: &Point) -> f64 {
    match p.manifold().kind() {
        ManifoldKind::Sphere => 0.9 * std::f64::consts::PI,
        _ => 3.0,
    }
}

proptest! {
    #[test]
    fn log_inverts_exp((p, c) in point_and_vector(), s in 0.0..1.0f64) {
        let v = tangent(&p, &c, 1.0);
        let v = if v.norm() > 0.0 { v.scale(s * limit(&p) / v.norm()) } else { v };
        let q = v.exp().unwrap();
        let back = p.log(&q).unwrap();
        let err = back.sub(&v).unwrap().norm();
        prop_assert!(err <= 1e-8 * v.norm().max(1.0), "err {err}");
        prop_assert!((p.dist(&q).unwrap() - v.norm()).abs() <= 1e-9 * v.norm().max(1.0));
    }

    #[test]
    fn distance_is_symmetric_and_vanishes_on_the_diagonal((p, c) in point_and_vector()) {
        let v = tangent(&p, &c, 0.5);
        let q = v.exp().unwrap();
        let (a, b) = (p.dist(&q).unwrap(), q.dist(&p).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        prop_assert!(p.dist(&p).unwrap() <= 1e-12);
    }

    #[test]
    fn log_lands_in_the_tangent_space((p, c) in point_and_vector()) {
        let q = tangent(&p, &c, 0.7).exp().unwrap();
        let u = p.log(&q).unwrap();
        // The sphere's and hyperboloid's tangent spaces are orthogonal to p in their ambient forms.
        let m = p.manifold();
        if m.kind() != ManifoldKind::Euclidean {
            let defect = m.ambient_inner(p.coords(), u.coords());
            prop_assert!(defect.abs() <= 1e-9 * u.norm().max(1.0), "defect {defect}");
        }
    }

    #[test]
    fn triangle_inequality((p, c) in point_and_vector(), d in coords(5)) {
        let q = tangent(&p, &c, 0.4).exp().unwrap();
        let r = tangent(&p, &d, 0.4).exp().unwrap();
        let (pq, qr, pr) = (p.dist(&q).unwrap(), q.dist(&r).unwrap(), p.dist(&r).unwrap());
        prop_assert!(pr <= pq + qr + 1e-9);
    }
}

#[test]
fn sphere_distance_matches_the_angle() {
    // Independent check: the angle between unit vectors via atan2 of cross and dot.
    let m = ManifoldSpec::sphere(2);
    let p = m.point(vec![1.0, 0.0, 0.0]).unwrap();
    let q = m.project_point(vec![1.0, 2.0, 2.0]).unwrap();
    let expected = (8f64.sqrt()).atan2(1.0);
    assert!((p.dist(&q).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn hyperbolic_distance_matches_acosh() {
    let m = ManifoldSpec::hyperboloid(2);
    let p = m.origin();
    let q = m.project_point(vec![0.0, 0.75, 0.0]).unwrap();
    // -<p,q>_L = x0 = 1.25 so d = acosh(1.25) = ln 2.
    assert!((p.dist(&q).unwrap() - 2f64.ln()).abs() < 1e-14);
}
