//! Brute-force reference computations. These deliberately share nothing with
//! the solvers they check beyond constraint evaluation and the closed-form
//! exp/dist of the manifold.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::manifold::{tangent_basis, Point};
use crate::region::ConvexRegion;

pub const ORACLE_ANGLES: usize = 10_000;
const RAY_BISECTION: usize = 60;
const GOLDEN_STEPS: usize = 80;

/// Nearest feasible distance to `q` on a two-dimensional region, by scanning
/// boundary points on 10⁴ rays from the anchor and refining the best ray with
/// golden-section search.
pub fn projection_distance_2d(region: &ConvexRegion, q: &Point) -> Result<f64> {
    let anchor = region.anchor();
    let basis = tangent_basis(anchor);
    assert_eq!(basis.len(), 2, "the oracle scans two-dimensional regions only");
    let boundary_distance = |theta: f64| -> Result<f64> {
        let dir = basis[0].scale(theta.cos()).add(&basis[1].scale(theta.sin()))?;
        let feasible = |t: f64| -> Result<bool> { Ok(region.max_constraint(&dir.scale(t).exp()?)? <= 0.0) };
        let mut hi = 0.25;
        while feasible(hi)? {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..RAY_BISECTION {
            let mid = 0.5 * (lo + hi);
            if feasible(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        dir.scale(lo).exp()?.dist(q)
    };

    let step = std::f64::consts::TAU / ORACLE_ANGLES as f64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..ORACLE_ANGLES {
        let theta = k as f64 * step;
        let d = boundary_distance(theta)?;
        if d < best.0 {
            best = (d, theta);
        }
    }

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (boundary_distance(c)?, boundary_distance(d)?);
    for _ in 0..GOLDEN_STEPS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = boundary_distance(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = boundary_distance(d)?;
        }
    }
    Ok(best.0.min(fc).min(fd))
}

/// Multipliers of the classical KKT system Σ λᵢ aᵢ = −c over the active
/// constraints, by a direct least-squares solve.
pub fn affine_multipliers(active_normals: &[Vec<f64>], objective_gradient: &[f64]) -> Vec<f64> {
    let n = objective_gradient.len();
    let k = active_normals.len();
    let a = DMatrix::from_fn(n, k, |r, c| active_normals[c][r]);
    let rhs = -DVector::from_column_slice(objective_gradient);
    let qr = (a.transpose() * &a).lu();
    qr.solve(&(a.transpose() * rhs)).expect("active normals are independent").iter().copied().collect()
}
